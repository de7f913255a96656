use std::ops::Range;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{Cache, Init, LayerSpec, Seq};
use super::params::{Layout, ParamVector};
use super::ModelSpec;
use crate::loaddata::SupervisedWindowSet;
use crate::metrics::MetricsReport;
use crate::{seed, Error, Result};

/// Units in which validation metrics are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricSpace {
    /// Min-max scaled units, as the model sees them.
    #[default]
    Scaled,
    /// kWh, after undoing each client's scaler.
    Original,
}

/// A feed-forward stack of layers with a fixed input shape.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<LayerSpec>,
    input_steps: usize,
    input_dim: usize,
    output_len: usize,
    ranges: Vec<Range<usize>>,
    inits: Vec<(Range<usize>, Init)>,
    layout: Arc<Layout>,
}

impl Network {
    /// Build the network described by `spec` (univariate input).
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let net = Self::sequential(spec.layers()?, spec.input_len, 1)?;
        if net.output_len != spec.output_len {
            return Err(Error::Shape(format!(
                "network emits {} values, horizon is {}",
                net.output_len, spec.output_len
            )));
        }
        Ok(net)
    }

    /// Build an arbitrary stack taking `input_steps × input_dim` inputs.
    pub fn sequential(layers: Vec<LayerSpec>, input_steps: usize, input_dim: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        let mut layout = Layout::default();
        let mut ranges = Vec::with_capacity(layers.len());
        let mut inits = Vec::new();
        let (mut steps, mut dim) = (input_steps, input_dim);
        for (i, layer) in layers.iter().enumerate() {
            (steps, dim) = layer.output_shape(steps, dim)?;
            let start = layout.len();
            for (name, shape, init) in layer.tensors(&format!("layer{i}.")) {
                let offset = layout.push(name, shape);
                inits.push((offset..layout.len(), init));
            }
            ranges.push(start..layout.len());
        }
        Ok(Network {
            layers,
            input_steps,
            input_dim,
            output_len: steps * dim,
            ranges,
            inits,
            layout: Arc::new(layout),
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn param_count(&self) -> usize {
        self.layout.len()
    }

    /// Number of input scalars per example.
    pub fn input_len(&self) -> usize {
        self.input_steps * self.input_dim
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    /// Glorot-uniform weights, zero biases; tensors drawn in layout order.
    pub fn init(&self, seed: u64) -> ParamVector {
        let mut rng = seed::rng(seed);
        let mut values = vec![0.0; self.layout.len()];
        for (range, init) in &self.inits {
            if let Init::Glorot { fan_in, fan_out } = *init {
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for v in &mut values[range.clone()] {
                    *v = rng.random_range(-bound..=bound);
                }
            }
        }
        ParamVector::new(values, self.layout.clone()).expect("layout length")
    }

    fn check_params(&self, params: &ParamVector) -> Result<()> {
        if params.len() != self.layout.len() || **params.layout() != *self.layout {
            return Err(Error::LayoutMismatch);
        }
        Ok(())
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_len() {
            return Err(Error::Shape(format!(
                "input of length {}, expected {}",
                input.len(),
                self.input_len()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("non-finite input".into()));
        }
        Ok(())
    }

    fn forward_cached(&self, p: &[f64], input: &[f64]) -> (Vec<f64>, Vec<Cache>) {
        let mut x = Seq {
            steps: self.input_steps,
            dim: self.input_dim,
            data: input.to_vec(),
        };
        let mut caches = Vec::with_capacity(self.layers.len());
        for (layer, range) in self.layers.iter().zip(&self.ranges) {
            let (y, cache) = layer.forward(&p[range.clone()], x);
            caches.push(cache);
            x = y;
        }
        (x.data, caches)
    }

    /// Prediction for one input window.
    pub fn forward(&self, params: &ParamVector, input: &[f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        self.check_input(input)?;
        Ok(self.forward_cached(&params.values, input).0)
    }

    /// Batch-mean squared error and its gradient. `inputs[i]` and
    /// `targets[i]` form one example.
    pub fn loss_and_gradient(
        &self,
        params: &ParamVector,
        inputs: &[&[f64]],
        targets: &[&[f64]],
    ) -> Result<(f64, ParamVector)> {
        self.check_params(params)?;
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::Shape(format!(
                "{} inputs and {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let p = &params.values;
        let mut grad = vec![0.0; p.len()];
        let scale = 2.0 / (inputs.len() * self.output_len) as f64;
        let mut total = 0.0;
        for (input, target) in inputs.iter().zip(targets) {
            self.check_input(input)?;
            if target.len() != self.output_len {
                return Err(Error::Shape(format!(
                    "target of length {}, expected {}",
                    target.len(),
                    self.output_len
                )));
            }
            let (pred, caches) = self.forward_cached(p, input);
            let mut sq = 0.0;
            let mut d = Vec::with_capacity(pred.len());
            for (y, t) in pred.iter().zip(target.iter()) {
                sq += (y - t) * (y - t);
                d.push(scale * (y - t));
            }
            total += sq / self.output_len as f64;
            let last = self.layers.len() - 1;
            let out_steps = self.output_len / self.layer_out_dim(last);
            let mut dy = Seq {
                steps: out_steps,
                dim: self.layer_out_dim(last),
                data: d,
            };
            for i in (0..self.layers.len()).rev() {
                let range = self.ranges[i].clone();
                dy = self.layers[i].backward(&p[range.clone()], &caches[i], &dy, &mut grad[range]);
            }
        }
        let loss = total / inputs.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("loss is {loss}")));
        }
        Ok((loss, ParamVector::new(grad, self.layout.clone())?))
    }

    fn layer_out_dim(&self, index: usize) -> usize {
        match self.layers[index] {
            LayerSpec::Lstm { hidden, .. } => hidden,
            LayerSpec::Dense { output, .. } => output,
            LayerSpec::Conv1d { out_channels, .. } => out_channels,
            LayerSpec::RepeatVector { .. } => {
                if index == 0 {
                    self.input_dim
                } else {
                    self.layer_out_dim(index - 1)
                }
            }
        }
    }

    /// [`Network::loss_and_gradient`] over the examples `indices` of `windows`.
    pub fn batch_loss_and_gradient(
        &self,
        params: &ParamVector,
        windows: &SupervisedWindowSet,
        indices: &[usize],
    ) -> Result<(f64, ParamVector)> {
        let inputs: Vec<&[f64]> = indices.iter().map(|&i| windows.input(i)).collect();
        let targets: Vec<&[f64]> = indices.iter().map(|&i| windows.target(i)).collect();
        self.loss_and_gradient(params, &inputs, &targets)
    }

    /// Mean squared error over a window set, without gradients.
    pub fn loss(&self, params: &ParamVector, windows: &SupervisedWindowSet) -> Result<f64> {
        let pred = self.predict(params, windows)?;
        let sq: f64 = pred
            .iter()
            .zip(windows.targets())
            .map(|(y, t)| (y - t) * (y - t))
            .sum();
        Ok(sq / pred.len().max(1) as f64)
    }

    /// Predictions for every window, flattened `len × horizon`.
    pub fn predict(&self, params: &ParamVector, windows: &SupervisedWindowSet) -> Result<Vec<f64>> {
        self.check_params(params)?;
        let mut out = Vec::with_capacity(windows.targets().len());
        for i in 0..windows.len() {
            let input = windows.input(i);
            self.check_input(input)?;
            out.extend(self.forward_cached(&params.values, input).0);
        }
        Ok(out)
    }

    /// Metrics over the concatenation of several clients' window sets.
    pub fn evaluate(
        &self,
        params: &ParamVector,
        sets: &[&SupervisedWindowSet],
        space: MetricSpace,
    ) -> Result<MetricsReport> {
        let pairs: Vec<_> = sets.iter().map(|s| (params, *s)).collect();
        self.evaluate_each(&pairs, space)
    }

    /// Like [`Network::evaluate`], but every window set is predicted with
    /// its own parameters (personalised models).
    pub fn evaluate_each(
        &self,
        models: &[(&ParamVector, &SupervisedWindowSet)],
        space: MetricSpace,
    ) -> Result<MetricsReport> {
        let mut actual = Vec::new();
        let mut predicted = Vec::new();
        for (params, set) in models {
            let pred = self.predict(params, set)?;
            match space {
                MetricSpace::Scaled => {
                    actual.extend_from_slice(set.targets());
                    predicted.extend(pred);
                }
                MetricSpace::Original => {
                    actual.extend(set.scaler.unscale(set.targets()));
                    predicted.extend(set.scaler.unscale(&pred));
                }
            }
        }
        if predicted.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence("non-finite prediction".into()));
        }
        MetricsReport::compute(&actual, &predicted)
    }
}
