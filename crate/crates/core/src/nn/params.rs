use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const CHECKPOINT_MAGIC: &[u8; 4] = b"FLPV";

/// One named tensor inside a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn size(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Ordered description of the tensors packed into a [`ParamVector`]:
/// layer declaration order, row-major within each tensor.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Layout {
    pub tensors: Vec<TensorSpec>,
}

impl Layout {
    pub fn push(&mut self, name: impl Into<String>, shape: Vec<usize>) -> usize {
        let offset = self.len();
        self.tensors.push(TensorSpec {
            name: name.into(),
            shape,
            offset,
        });
        offset
    }

    pub fn len(&self) -> usize {
        self.tensors.last().map_or(0, |t| t.offset + t.size())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, name: &str) -> Option<&TensorSpec> {
        self.tensors.iter().find(|t| t.name == name)
    }
}

/// Flat model parameters (or an update/gradient with the same layout).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub values: Vec<f64>,
    layout: Arc<Layout>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, layout: Arc<Layout>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::Shape(format!(
                "{} values for a layout of {}",
                values.len(),
                layout.len()
            )));
        }
        Ok(ParamVector { values, layout })
    }

    pub fn zeros(layout: Arc<Layout>) -> Self {
        ParamVector {
            values: vec![0.0; layout.len()],
            layout,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.layout.clone())
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || *self.layout == *other.layout
    }

    pub fn ensure_same_layout(&self, other: &ParamVector) -> Result<()> {
        if self.same_layout(other) {
            Ok(())
        } else {
            Err(Error::LayoutMismatch)
        }
    }

    /// Values of one named tensor.
    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        let t = self.layout.get(name)?;
        Some(&self.values[t.offset..t.offset + t.size()])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let t = self.layout.get(name)?.clone();
        Some(&mut self.values[t.offset..t.offset + t.size()])
    }

    /// Split into one owned vector per tensor.
    pub fn unpack(&self) -> Vec<(String, Vec<f64>)> {
        self.layout
            .tensors
            .iter()
            .map(|t| (t.name.clone(), self.values[t.offset..t.offset + t.size()].to_vec()))
            .collect()
    }

    /// Inverse of [`ParamVector::unpack`].
    pub fn pack(layout: Arc<Layout>, parts: &[(String, Vec<f64>)]) -> Result<Self> {
        if parts.len() != layout.tensors.len() {
            return Err(Error::LayoutMismatch);
        }
        let mut values = Vec::with_capacity(layout.len());
        for (spec, (name, data)) in layout.tensors.iter().zip(parts) {
            if *name != spec.name || data.len() != spec.size() {
                return Err(Error::LayoutMismatch);
            }
            values.extend_from_slice(data);
        }
        ParamVector::new(values, layout)
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `self − other`.
    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        self.ensure_same_layout(other)?;
        Ok(ParamVector {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            layout: self.layout.clone(),
        })
    }

    /// `self + other`.
    pub fn add(&self, other: &ParamVector) -> Result<ParamVector> {
        self.ensure_same_layout(other)?;
        Ok(ParamVector {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            layout: self.layout.clone(),
        })
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &ParamVector) -> Result<()> {
        self.ensure_same_layout(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> ParamVector {
        ParamVector {
            values: self.values.iter().map(|v| v * factor).collect(),
            layout: self.layout.clone(),
        }
    }

    /// Checkpoint: magic, u32 LE header length, JSON layout, f64 LE values.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::to_vec(&*self.layout)?;
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ParamVector> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Shape("not a parameter checkpoint".into()));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut header = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut header)?;
        let layout: Layout = serde_json::from_slice(&header)?;
        let mut values = Vec::with_capacity(layout.len());
        let mut buf = [0u8; 8];
        for _ in 0..layout.len() {
            r.read_exact(&mut buf)?;
            values.push(f64::from_le_bytes(buf));
        }
        ParamVector::new(values, Arc::new(layout))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn layout(shapes: &[Vec<usize>]) -> Arc<Layout> {
        let mut l = Layout::default();
        for (i, s) in shapes.iter().enumerate() {
            l.push(format!("t{i}"), s.clone());
        }
        Arc::new(l)
    }

    #[test]
    fn checkpoint_round_trip() {
        let l = layout(&[vec![2, 3], vec![3]]);
        let p = ParamVector::new((0..9).map(|i| i as f64 * 0.1 - 0.3).collect(), l).unwrap();
        let mut buf = Vec::new();
        p.write_checkpoint(&mut buf).unwrap();
        assert_eq!(ParamVector::read_checkpoint(&buf[..]).unwrap(), p);
    }

    #[test]
    fn layout_mismatch_is_reported() {
        let a = ParamVector::zeros(layout(&[vec![2]]));
        let b = ParamVector::zeros(layout(&[vec![3]]));
        assert!(matches!(a.sub(&b), Err(Error::LayoutMismatch)));
    }

    proptest! {
        #[test]
        fn pack_unpack_identity(
            shapes in proptest::collection::vec(proptest::collection::vec(1usize..5, 1..3), 1..5),
            seed in any::<u64>(),
        ) {
            let l = layout(&shapes);
            let values: Vec<f64> = (0..l.len()).map(|i| (seed.wrapping_add(i as u64) % 1000) as f64 / 7.0).collect();
            let p = ParamVector::new(values, l.clone()).unwrap();
            let total: usize = l.tensors.iter().map(TensorSpec::size).sum();
            prop_assert_eq!(total, p.len());
            prop_assert_eq!(ParamVector::pack(l, &p.unpack()).unwrap(), p);
        }
    }
}
