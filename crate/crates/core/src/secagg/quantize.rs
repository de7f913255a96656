use serde::{Deserialize, Serialize};

use super::PrimeField;
use crate::{Error, Result};

/// Fixed-point encoding of update coordinates in `[−B, B]` as field
/// elements: `code = round(x·2^bits) + round(B·2^bits)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationSpec {
    /// `B`.
    pub clip_range: f64,
    pub bits: u32,
    /// Largest number of codes that will ever be summed.
    pub max_participants: usize,
}

impl QuantizationSpec {
    pub fn new(clip_range: f64, bits: u32, max_participants: usize) -> Self {
        QuantizationSpec {
            clip_range,
            bits,
            max_participants,
        }
    }

    fn unit(&self) -> f64 {
        (self.bits as f64).exp2()
    }

    /// Code of the value 0.
    pub fn offset(&self) -> u64 {
        (self.clip_range * self.unit()).round() as u64
    }

    /// Check that sums of `max_participants` codes cannot wrap around `p`.
    pub fn validate(&self, field: &PrimeField) -> Result<()> {
        if !(self.clip_range > 0.0 && self.clip_range.is_finite()) || self.bits > 52 {
            return Err(Error::Quantization(format!("invalid spec {self:?}")));
        }
        let span = 2.0 * self.clip_range * self.unit() + 1.0;
        if span * self.max_participants.max(1) as f64 >= field.modulus() as f64 {
            return Err(Error::Quantization(format!(
                "2B·2^bits·n_max exceeds the field modulus for {self:?}"
            )));
        }
        Ok(())
    }
}

pub fn quantize(values: &[f64], spec: &QuantizationSpec, field: &PrimeField) -> Result<Vec<u64>> {
    spec.validate(field)?;
    let unit = spec.unit();
    let offset = spec.offset() as i64;
    values
        .iter()
        .map(|&x| {
            if !x.is_finite() || x.abs() > spec.clip_range {
                return Err(Error::Quantization(format!(
                    "coordinate {x} outside [−{0}, {0}]",
                    spec.clip_range
                )));
            }
            let code = (x * unit).round() as i64 + offset;
            Ok(field.elem(code.max(0) as u64))
        })
        .collect()
}

/// Decode a field sum of `n_participants` codes back to the plain sum.
pub fn dequantize(sum: &[u64], spec: &QuantizationSpec, n_participants: usize) -> Vec<f64> {
    let unit = spec.unit();
    let total_offset = spec.offset() as i128 * n_participants as i128;
    sum.iter()
        .map(|&s| (s as i128 - total_offset) as f64 / unit)
        .collect()
}
