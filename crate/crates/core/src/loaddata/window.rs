use super::ScalerParams;
use crate::{Error, Result};

/// Sliding-window supervised examples. Inputs and targets are stored flat,
/// row-major, `len() × lookback` and `len() × horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedWindowSet {
    lookback: usize,
    horizon: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    pub scaler: ScalerParams,
}

/// Cut `series` into examples whose input is `[i, i+L)` and target
/// `[i+L, i+L+h)`.
pub fn make_windows(
    series: &[f64],
    lookback: usize,
    horizon: usize,
    scaler: ScalerParams,
) -> Result<SupervisedWindowSet> {
    if lookback == 0 || horizon == 0 {
        return Err(Error::Windowing("lookback and horizon must be ≥ 1".into()));
    }
    if series.len() < lookback + horizon {
        return Err(Error::Windowing(format!(
            "series of length {} too short for lookback {lookback} + horizon {horizon}",
            series.len()
        )));
    }
    let count = series.len() - lookback - horizon + 1;
    let mut inputs = Vec::with_capacity(count * lookback);
    let mut targets = Vec::with_capacity(count * horizon);
    for i in 0..count {
        inputs.extend_from_slice(&series[i..i + lookback]);
        targets.extend_from_slice(&series[i + lookback..i + lookback + horizon]);
    }
    Ok(SupervisedWindowSet {
        lookback,
        horizon,
        inputs,
        targets,
        scaler,
    })
}

impl SupervisedWindowSet {
    /// Build directly from flat buffers.
    pub fn from_parts(
        lookback: usize,
        horizon: usize,
        inputs: Vec<f64>,
        targets: Vec<f64>,
        scaler: ScalerParams,
    ) -> Result<Self> {
        if lookback == 0
            || horizon == 0
            || !inputs.len().is_multiple_of(lookback)
            || !targets.len().is_multiple_of(horizon)
            || inputs.len() / lookback != targets.len() / horizon
        {
            return Err(Error::Windowing("inconsistent window buffers".into()));
        }
        Ok(SupervisedWindowSet {
            lookback,
            horizon,
            inputs,
            targets,
            scaler,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.lookback..(i + 1) * self.lookback]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.horizon..(i + 1) * self.horizon]
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// Append another set with the same shape.
    pub fn extend(&mut self, other: &SupervisedWindowSet) {
        assert_eq!(self.lookback, other.lookback);
        assert_eq!(self.horizon, other.horizon);
        self.inputs.extend_from_slice(&other.inputs);
        self.targets.extend_from_slice(&other.targets);
    }

    /// Keep only the first `n` examples.
    pub fn truncate(&mut self, n: usize) {
        self.inputs.truncate(n * self.lookback);
        self.targets.truncate(n * self.horizon);
    }
}
