//! Simulated federated training: client sampling, Fed-Avg and Fed-SGD
//! rounds with optional clipping, server noise and secure aggregation, and
//! per-round reporting.

mod engine;

use std::io::Write;

use rand::seq::index;
use serde::{Deserialize, Serialize};

pub use engine::{run_fedavg, run_fedsgd, run_federated, FedOutcome, RoundObserver};

use crate::metrics::MetricsReport;
use crate::nn::{MetricSpace, ParamVector};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    FedAvg,
    FedSgd,
}

/// How client trainers are seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientSeeding {
    /// Client `k` shuffles with `derive(train.seed, "client", k)`.
    #[default]
    Distinct,
    /// Every client uses `train.seed` itself.
    Shared,
}

/// Federation hyperparameters. The total number of clients `w` is the
/// number of client datasets handed to the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FederationConfig {
    /// Fraction `Q` of clients sampled per round.
    pub participation_ratio: f64,
    pub rounds: usize,
    /// Local epochs `E` per round (Fed-Avg only).
    pub local_epochs: usize,
    pub algorithm: Algorithm,
    /// Local fine-tuning epochs per client after the last round.
    pub post_training_local_epochs: usize,
    pub seed: u64,
    pub client_seeding: ClientSeeding,
    /// Stop once validation MSE has not improved for more than this many
    /// rounds.
    pub early_stop_patience: Option<usize>,
    pub metric_space: MetricSpace,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            participation_ratio: 1.0,
            rounds: 300,
            local_epochs: 5,
            algorithm: Algorithm::FedAvg,
            post_training_local_epochs: 0,
            seed: 0,
            client_seeding: ClientSeeding::Distinct,
            early_stop_patience: None,
            metric_space: MetricSpace::Scaled,
        }
    }
}

impl FederationConfig {
    pub fn validate(&self, total_clients: usize) -> Result<()> {
        let q = self.participation_ratio;
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Config(format!("participation ratio {q} must lie in (0, 1]")));
        }
        if total_clients == 0 {
            return Err(Error::Config("federation needs at least one client".into()));
        }
        if self.rounds == 0 || self.local_epochs == 0 {
            return Err(Error::Config("rounds and local epochs must be ≥ 1".into()));
        }
        if self.early_stop_patience == Some(0) {
            return Err(Error::Config("early-stop patience must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// `⌈Q·w⌉`, at least 1 and at most `w`.
pub fn clients_per_round(q: f64, w: usize) -> usize {
    // Guard against representation error such as 0.1·30 = 3.0000000000000004.
    let m = (q * w as f64 - 1e-9).ceil() as usize;
    m.clamp(1, w.max(1))
}

/// Uniform sample without replacement of `⌈Q·w⌉` client indices, sorted,
/// deterministic per `(seed, round)`.
pub fn sample_clients(round: usize, q: f64, w: usize, seed: u64) -> Vec<usize> {
    let m = clients_per_round(q, w);
    if m == w {
        return (0..w).collect();
    }
    let mut rng = seed::child_rng(seed, "sample", round as u64);
    let mut ids = index::sample(&mut rng, w, m).into_vec();
    ids.sort_unstable();
    ids
}

/// Unweighted element-wise mean, summed in the given order.
pub fn average_updates(updates: &[&ParamVector]) -> Result<ParamVector> {
    let first = updates
        .first()
        .ok_or_else(|| Error::Config("nothing to average".into()))?;
    let mut acc = first.zeros_like();
    for u in updates {
        acc.axpy(1.0, u)?;
    }
    let n = updates.len() as f64;
    for v in &mut acc.values {
        *v /= n;
    }
    Ok(acc)
}

/// What happened in one communication round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub validation: MetricsReport,
    /// Example-weighted mean local training loss of the successful clients.
    pub train_loss: f64,
    pub wall_time_seconds: f64,
    pub participants: Vec<String>,
    /// Clients whose local training diverged this round.
    pub failed: Vec<String>,
    /// Clients lost by secure aggregation.
    pub dropped: Vec<String>,
    pub clip_norm: Option<f64>,
    pub epsilon: Option<f64>,
}

impl RoundReport {
    pub fn write_json_line<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::nn::Layout;

    fn pv(values: Vec<f64>) -> ParamVector {
        let mut l = Layout::default();
        l.push("u", vec![values.len()]);
        ParamVector::new(values, Arc::new(l)).unwrap()
    }

    #[test]
    fn sampling_examples() {
        assert_eq!(sample_clients(3, 1.0, 7, 0), (0..7).collect::<Vec<_>>());
        let s = sample_clients(4, 0.1, 100, 9);
        assert_eq!(s.len(), 10);
        assert_eq!(s, sample_clients(4, 0.1, 100, 9));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(clients_per_round(0.1, 30), 3);
        assert_eq!(clients_per_round(0.01, 5), 1);
    }

    #[test]
    fn averaging_examples() {
        let u = pv(vec![0.3, -1.0]);
        assert_eq!(average_updates(&[&u, &u, &u]).unwrap(), u);
        let neg = u.scaled(-1.0);
        assert_eq!(average_updates(&[&u, &neg]).unwrap().values, vec![0.0, 0.0]);
        let a = pv(vec![1.0, 3.0]);
        let b = pv(vec![3.0, 5.0]);
        assert_eq!(average_updates(&[&a, &b]).unwrap().values, vec![2.0, 4.0]);
        assert!(average_updates(&[]).is_err());
    }
}
