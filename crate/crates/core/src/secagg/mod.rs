//! Dropout-tolerant secure aggregation: Shamir secret sharing over a prime
//! field, fixed-point quantisation and pairwise/self masking, so that the
//! server learns only the sum of the surviving clients' updates.

mod field;
mod protocol;
mod quantize;
mod shamir;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use field::{is_prime, PrimeField, MERSENNE_61};
pub use protocol::{
    default_threshold, expand_mask, run_secagg_round, Phase, SecAggSession, SeedKind,
    TranscriptEvent,
};
pub use quantize::{dequantize, quantize, QuantizationSpec};
pub use shamir::{reconstruct, share, share_with_coefficients, Share};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SecAggConfig {
    /// Reconstruction threshold `t`; `⌈2n/3⌉` of the round's participants
    /// when unset.
    pub threshold: Option<usize>,
    pub bits: u32,
    /// Quantisation range `B`; `max(S, 1)` when unset.
    pub clip_range: Option<f64>,
    pub modulus: u64,
    /// Probability that a participant drops out after the sharing phase.
    pub dropout_rate: f64,
}

impl Default for SecAggConfig {
    fn default() -> Self {
        SecAggConfig {
            threshold: None,
            bits: 16,
            clip_range: None,
            modulus: MERSENNE_61,
            dropout_rate: 0.0,
        }
    }
}

impl SecAggConfig {
    pub fn validate(&self) -> Result<()> {
        PrimeField::new(self.modulus)?;
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate {} must lie in [0, 1)",
                self.dropout_rate
            )));
        }
        if self.threshold == Some(0) {
            return Err(Error::Config("threshold must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Quantisation range for updates clipped to `clip_norm` (if any).
    pub fn range_for(&self, clip_norm: Option<f64>) -> f64 {
        self.clip_range
            .unwrap_or_else(|| clip_norm.filter(|s| s.is_finite()).unwrap_or(1.0).max(1.0))
    }
}

/// Outcome of one secure-aggregation round over float updates.
#[derive(Debug, Clone, PartialEq)]
pub struct SecureSum {
    /// Mean of the survivors' updates.
    pub mean: Vec<f64>,
    pub survivors: Vec<u64>,
    pub dropouts: Vec<u64>,
    pub transcript: Vec<TranscriptEvent>,
}

/// Quantise each participant's update, aggregate them through a fresh
/// session and decode the survivors' mean.
pub fn secure_mean(
    updates: &BTreeMap<u64, Vec<f64>>,
    dropouts: &BTreeSet<u64>,
    config: &SecAggConfig,
    clip_range: f64,
    session_seed: u64,
) -> Result<SecureSum> {
    let field = PrimeField::new(config.modulus)?;
    let ids: Vec<u64> = updates.keys().copied().collect();
    let n = ids.len();
    let spec = QuantizationSpec::new(clip_range, config.bits, n);
    let inputs: BTreeMap<u64, Vec<u64>> = updates
        .iter()
        .filter(|(id, _)| !dropouts.contains(id))
        .map(|(&id, u)| Ok((id, quantize(u, &spec, &field)?)))
        .collect::<Result<_>>()?;
    let t = config.threshold.unwrap_or_else(|| default_threshold(n)).min(n);
    let mut session = SecAggSession::new(&ids, t, field, session_seed)?;
    let sum = run_secagg_round(&mut session, &inputs, dropouts)?;
    let survivors: Vec<u64> = inputs.keys().copied().collect();
    let m = survivors.len() as f64;
    let mean = dequantize(&sum, &spec, survivors.len())
        .into_iter()
        .map(|v| v / m)
        .collect();
    Ok(SecureSum {
        mean,
        survivors,
        dropouts: ids.into_iter().filter(|id| dropouts.contains(id)).collect(),
        transcript: session.transcript().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn secure_mean_matches_plain_mean() {
        let updates: BTreeMap<u64, Vec<f64>> = [
            (0, vec![0.1, -0.2, 0.3]),
            (1, vec![0.05, 0.0, -0.25]),
            (2, vec![-0.4, 0.9, 0.01]),
        ]
        .into_iter()
        .collect();
        let out = secure_mean(&updates, &BTreeSet::new(), &SecAggConfig::default(), 1.0, 3).unwrap();
        for j in 0..3 {
            let plain: f64 = updates.values().map(|u| u[j]).sum::<f64>() / 3.0;
            assert!((out.mean[j] - plain).abs() <= 2f64.powi(-15));
        }
        assert!(!out.transcript.is_empty());
    }

    #[test]
    fn range_defaults_to_clip_or_one() {
        let c = SecAggConfig::default();
        assert_eq!(c.range_for(None), 1.0);
        assert_eq!(c.range_for(Some(0.3)), 1.0);
        assert_eq!(c.range_for(Some(2.5)), 2.5);
        assert_eq!(c.range_for(Some(f64::INFINITY)), 1.0);
    }
}
