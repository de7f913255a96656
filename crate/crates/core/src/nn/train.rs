use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::model::{MetricSpace, Network};
use super::optim::{adam_step, AdamState};
use super::params::ParamVector;
use crate::loaddata::SupervisedWindowSet;
use crate::metrics::MetricsReport;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 256,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 100,
            early_stop_patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.batch_size >= 1
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0
            && self.early_stop_patience >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid training config {self:?}")))
        }
    }
}

/// Walks a dataset in seeded, per-epoch shuffled mini-batches. The order of
/// epoch `e` comes from `child_rng(seed, "epoch", e)`.
#[derive(Debug, Clone)]
pub struct BatchCursor {
    n: usize,
    batch_size: usize,
    seed: u64,
    epoch: u64,
    order: Vec<usize>,
    pos: usize,
}

impl BatchCursor {
    pub fn new(n: usize, batch_size: usize, seed: u64) -> Self {
        let mut cursor = BatchCursor {
            n,
            batch_size: batch_size.max(1),
            seed,
            epoch: 0,
            order: Vec::new(),
            pos: 0,
        };
        cursor.shuffle();
        cursor
    }

    fn shuffle(&mut self) {
        self.order = (0..self.n).collect();
        self.order
            .shuffle(&mut seed::child_rng(self.seed, "epoch", self.epoch));
        self.pos = 0;
    }

    /// Completed epochs.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.n.div_ceil(self.batch_size)
    }

    /// Next batch of example indices; the last batch of an epoch may be
    /// short. Crossing an epoch boundary reshuffles.
    pub fn next_batch(&mut self) -> Vec<usize> {
        if self.pos >= self.n {
            self.epoch += 1;
            self.shuffle();
        }
        let end = (self.pos + self.batch_size).min(self.n);
        let batch = self.order[self.pos..end].to_vec();
        self.pos = end;
        batch
    }
}

/// Optimizer state and batch order for one learner, kept across calls so
/// that training can be resumed exactly where it stopped.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub adam: AdamState,
    pub cursor: BatchCursor,
}

impl Trainer {
    pub fn new(config: TrainConfig, n_examples: usize, n_params: usize) -> Result<Self> {
        config.validate()?;
        if n_examples == 0 {
            return Err(Error::Config("no training examples".into()));
        }
        Ok(Trainer {
            cursor: BatchCursor::new(n_examples, config.batch_size, config.seed),
            adam: AdamState::new(n_params),
            config,
        })
    }

    /// Gradient of the next batch without updating anything but the cursor.
    pub fn next_gradient(
        &mut self,
        net: &Network,
        params: &ParamVector,
        windows: &SupervisedWindowSet,
    ) -> Result<(f64, ParamVector, usize)> {
        let batch = self.cursor.next_batch();
        let (loss, grad) = net.batch_loss_and_gradient(params, windows, &batch)?;
        Ok((loss, grad, batch.len()))
    }

    /// Apply one Adam update with `gradient`.
    pub fn apply(&mut self, params: &mut ParamVector, gradient: &ParamVector) -> Result<()> {
        adam_step(params, gradient, &mut self.adam, &self.config)
    }

    /// One mini-batch step; returns the batch loss.
    pub fn step(
        &mut self,
        net: &Network,
        params: &mut ParamVector,
        windows: &SupervisedWindowSet,
    ) -> Result<f64> {
        let (loss, grad, _) = self.next_gradient(net, params, windows)?;
        self.apply(params, &grad)?;
        if !params.is_finite() {
            return Err(Error::Divergence("non-finite parameters".into()));
        }
        Ok(loss)
    }

    /// One pass over the data; returns the example-weighted mean batch loss.
    pub fn train_epoch(
        &mut self,
        net: &Network,
        params: &mut ParamVector,
        windows: &SupervisedWindowSet,
    ) -> Result<f64> {
        let mut total = 0.0;
        let mut seen = 0usize;
        for _ in 0..self.cursor.batches_per_epoch() {
            let (loss, grad, size) = self.next_gradient(net, params, windows)?;
            self.apply(params, &grad)?;
            if !params.is_finite() {
                return Err(Error::Divergence("non-finite parameters".into()));
            }
            total += loss * size as f64;
            seen += size;
        }
        Ok(total / seen as f64)
    }

    pub fn train_epochs(
        &mut self,
        net: &Network,
        params: &mut ParamVector,
        windows: &SupervisedWindowSet,
        epochs: usize,
    ) -> Result<Vec<f64>> {
        (0..epochs)
            .map(|_| self.train_epoch(net, params, windows))
            .collect()
    }
}

/// Train a copy of `params` for `epochs` epochs with a fresh optimizer.
/// Returns the final parameters and the per-epoch training loss.
pub fn train_local(
    net: &Network,
    params: &ParamVector,
    windows: &SupervisedWindowSet,
    config: &TrainConfig,
    epochs: usize,
) -> Result<(ParamVector, Vec<f64>)> {
    if epochs == 0 {
        return Err(Error::Config("epochs must be ≥ 1".into()));
    }
    let mut trainer = Trainer::new(config.clone(), windows.len(), params.len())?;
    let mut p = params.clone();
    let losses = trainer.train_epochs(net, &mut p, windows, epochs)?;
    Ok((p, losses))
}

/// True iff the best (lowest) value of `history` lies more than `patience`
/// entries before the last one.
pub fn early_stopper(history: &[f64], patience: usize) -> bool {
    let Some(best) = history
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
    else {
        return false;
    };
    history.len() - 1 - best > patience
}

#[derive(Debug, Clone)]
pub struct EarlyStopOutcome {
    /// Parameters at the epoch with the lowest validation MSE.
    pub params: ParamVector,
    pub train_losses: Vec<f64>,
    pub validation: Vec<MetricsReport>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Train up to `config.max_epochs`, evaluating validation MSE after each
/// epoch and stopping once it has not improved for more than
/// `config.early_stop_patience` epochs.
pub fn train_with_early_stopping(
    net: &Network,
    params: &ParamVector,
    train: &SupervisedWindowSet,
    validation: &[&SupervisedWindowSet],
    config: &TrainConfig,
    space: MetricSpace,
) -> Result<EarlyStopOutcome> {
    if config.max_epochs == 0 {
        return Err(Error::Config("max_epochs must be ≥ 1".into()));
    }
    let mut trainer = Trainer::new(config.clone(), train.len(), params.len())?;
    let mut p = params.clone();
    let mut best = p.clone();
    let mut train_losses = Vec::new();
    let mut reports: Vec<MetricsReport> = Vec::new();
    let mut history = Vec::new();
    let mut stopped_early = false;
    for _ in 0..config.max_epochs {
        train_losses.push(trainer.train_epoch(net, &mut p, train)?);
        let report = net.evaluate(&p, validation, space)?;
        if history.iter().all(|&h: &f64| report.mse < h) {
            best = p.clone();
        }
        history.push(report.mse);
        reports.push(report);
        if early_stopper(&history, config.early_stop_patience) {
            stopped_early = true;
            break;
        }
    }
    let best_epoch = history
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(i, _)| i);
    Ok(EarlyStopOutcome {
        params: best,
        train_losses,
        validation: reports,
        best_epoch,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_stopper_examples() {
        let decreasing: Vec<f64> = (0..20).map(|i| 10.0 - i as f64).collect();
        assert!(!early_stopper(&decreasing, 3));
        let mut flat = vec![1.0];
        flat.extend(std::iter::repeat_n(2.0, 11));
        assert_eq!(flat.len(), 12);
        assert!(early_stopper(&flat, 10));
        assert!(!early_stopper(&flat[..11], 10));
        assert!(!early_stopper(&[3.0, 4.0], 10));
        assert!(!early_stopper(&[], 1));
    }

    #[test]
    fn cursor_covers_every_example_once_per_epoch() {
        let mut c = BatchCursor::new(10, 4, 3);
        let mut seen: Vec<usize> = (0..3).flat_map(|_| c.next_batch()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
        assert_eq!(c.next_batch().len(), 4);
        assert_eq!(c.epoch(), 1);
    }
}
