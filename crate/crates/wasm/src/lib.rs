//! Browser bindings for three interactive views: the privacy curve of the
//! subsampled Gaussian mechanism, the adaptive clipping bound on a
//! synthetic stream of update norms, and synthetic household load with its
//! pairwise correlation.
//!
//! Each export is a thin wrapper around a plain function so that the
//! numerics are testable on the host.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use fedload::accountant::epsilon_for;
use fedload::clustering::correlation_matrix;
use fedload::dp::{adaptive_clip_update, ClipState};
use fedload::loaddata::{generate_synthetic, SyntheticSpec};
use fedload::{seed, Error, Result};
use rand_distr::{Distribution, LogNormal};
use wasm_bindgen::prelude::*;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// ε at each noise multiplier in `zs` after `rounds` rounds at sampling
/// ratio `q`.
pub fn privacy_curve_native(zs: &[f64], rounds: usize, q: f64, delta: f64) -> Result<Vec<f64>> {
    zs.iter().map(|&z| epsilon_for(rounds, q, z, delta).map(|(eps, _)| eps)).collect()
}

#[wasm_bindgen]
pub fn privacy_curve(zs: &[f64], rounds: usize, q: f64, delta: f64) -> std::result::Result<Vec<f64>, JsError> {
    privacy_curve_native(zs, rounds, q, delta).map_err(js)
}

/// Inputs of the clipping simulation. Update norms in round `t` are
/// lognormal with median `norm_median·norm_decay^t`.
#[wasm_bindgen]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipDemo {
    pub rounds: usize,
    pub clients: usize,
    pub initial_clip: f64,
    pub target_quantile: f64,
    pub learning_rate: f64,
    pub count_noise: f64,
    pub norm_median: f64,
    pub norm_spread: f64,
    pub norm_decay: f64,
    pub seed: u64,
}

#[wasm_bindgen]
impl ClipDemo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> ClipDemo {
        ClipDemo::default()
    }
}

impl Default for ClipDemo {
    fn default() -> Self {
        ClipDemo {
            rounds: 200,
            clients: 20,
            initial_clip: 0.1,
            target_quantile: 0.5,
            learning_rate: 0.2,
            count_noise: 0.0,
            norm_median: 1.0,
            norm_spread: 0.5,
            norm_decay: 0.995,
            seed: 0,
        }
    }
}

/// Clip bound and the true norm quantile per round.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct ClipTrajectory {
    clip: Vec<f64>,
    quantile: Vec<f64>,
}

#[wasm_bindgen]
impl ClipTrajectory {
    /// Bound in force at the start of each round, plus the final bound.
    #[wasm_bindgen(getter)]
    pub fn clip(&self) -> Vec<f64> {
        self.clip.clone()
    }

    /// Target quantile of the norm distribution in each round.
    #[wasm_bindgen(getter)]
    pub fn quantile(&self) -> Vec<f64> {
        self.quantile.clone()
    }
}

/// Quantile `p` of `LogNormal(μ, s)`.
fn lognormal_quantile(mu: f64, s: f64, p: f64) -> f64 {
    (mu + s * probit(p)).exp()
}

/// Inverse standard normal CDF (Acklam's rational approximation,
/// relative error below 1.2e-9).
fn probit(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.38357751867269e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] =
        [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    if p < 0.02425 {
        tail((-2.0 * p.ln()).sqrt())
    } else if p > 1.0 - 0.02425 {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

pub fn adaptive_clip_native(demo: &ClipDemo) -> Result<ClipTrajectory> {
    let bad = |m: &str| Err(Error::Config(m.into()));
    if !(demo.norm_median > 0.0 && demo.norm_decay > 0.0) {
        return bad("norm median and decay must be positive");
    }
    if !(demo.target_quantile > 0.0 && demo.target_quantile < 1.0) {
        return bad("target quantile must lie in (0, 1)");
    }
    if !(demo.initial_clip > 0.0) {
        return bad("initial clip must be positive");
    }
    let mut rng = seed::child_rng(demo.seed, "norms", 0);
    let mut state = ClipState::new(demo.initial_clip);
    let mut quantile = Vec::with_capacity(demo.rounds);
    for round in 0..demo.rounds {
        let mu = (demo.norm_median * demo.norm_decay.powi(round as i32)).ln();
        let dist = LogNormal::new(mu, demo.norm_spread).map_err(|e| Error::Config(e.to_string()))?;
        let within: Vec<bool> =
            (0..demo.clients).map(|_| dist.sample(&mut rng) <= state.current).collect();
        quantile.push(lognormal_quantile(mu, demo.norm_spread, demo.target_quantile));
        let noise_seed = seed::derive(demo.seed, "count-noise", round as u64);
        state = adaptive_clip_update(
            &state,
            &within,
            demo.count_noise,
            demo.learning_rate,
            demo.target_quantile,
            noise_seed,
        )?;
    }
    let clip = state.trajectory().into_iter().map(|(_, c)| c).collect();
    Ok(ClipTrajectory { clip, quantile })
}

#[wasm_bindgen]
pub fn adaptive_clip_trajectory(demo: &ClipDemo) -> std::result::Result<ClipTrajectory, JsError> {
    adaptive_clip_native(demo).map_err(js)
}

/// Hourly load of a synthetic population and its correlation structure.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLoad {
    clients: usize,
    hours: usize,
    values: Vec<f64>,
    correlation: Vec<f64>,
    mean_correlation: f64,
}

#[wasm_bindgen]
impl SyntheticLoad {
    #[wasm_bindgen(getter)]
    pub fn clients(&self) -> usize {
        self.clients
    }

    #[wasm_bindgen(getter)]
    pub fn hours(&self) -> usize {
        self.hours
    }

    /// Row-major `clients × hours` kWh values.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Row-major `clients × clients` Pearson coefficients.
    #[wasm_bindgen(getter)]
    pub fn correlation(&self) -> Vec<f64> {
        self.correlation.clone()
    }

    /// Mean coefficient over all client pairs.
    #[wasm_bindgen(getter)]
    pub fn mean_correlation(&self) -> f64 {
        self.mean_correlation
    }
}

pub fn synthetic_load_native(
    clients: usize,
    days: usize,
    shared_weight: f64,
    noise_std: f64,
    seed: u64,
) -> Result<SyntheticLoad> {
    let spec = SyntheticSpec { n_clients: clients, days, shared_weight, noise_std, seed, ..Default::default() };
    let series = generate_synthetic(&spec)?;
    let ids: Vec<String> = series.iter().map(|s| s.client_id.clone()).collect();
    let rows: Vec<&[f64]> = series.iter().map(|s| s.values.as_slice()).collect();
    let matrix = correlation_matrix(&ids, &rows)?;
    let all: Vec<usize> = (0..clients).collect();
    let mean_correlation = matrix
        .mean_pairwise(&all)
        .ok_or_else(|| Error::Correlation("a client series is constant".into()))?;
    let correlation = (0..clients)
        .flat_map(|i| (0..clients).map(move |j| (i, j)))
        .map(|(i, j)| matrix.get(i, j).unwrap_or(f64::NAN))
        .collect();
    Ok(SyntheticLoad {
        clients,
        hours: days * 24,
        values: series.into_iter().flat_map(|s| s.values).collect(),
        correlation,
        mean_correlation,
    })
}

#[wasm_bindgen]
pub fn synthetic_load(
    clients: usize,
    days: usize,
    shared_weight: f64,
    noise_std: f64,
    seed: u64,
) -> std::result::Result<SyntheticLoad, JsError> {
    synthetic_load_native(clients, days, shared_weight, noise_std, seed).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_matches_the_accountant_and_falls_with_noise() {
        let zs = [0.5, 0.9, 1.5, 3.0];
        let eps = privacy_curve_native(&zs, 100, 0.1, 1e-5).unwrap();
        for (z, e) in zs.iter().zip(&eps) {
            assert_eq!(*e, epsilon_for(100, 0.1, *z, 1e-5).unwrap().0);
        }
        assert!(eps.windows(2).all(|w| w[1] < w[0]));
        assert!(privacy_curve_native(&[0.0], 10, 0.1, 1e-5).is_err());
    }

    #[test]
    fn probit_inverts_known_quantiles() {
        assert_eq!(probit(0.5), 0.0);
        assert!((probit(0.975) - 1.959963984540054).abs() < 1e-8);
        assert!((probit(0.01) + 2.326347874040841).abs() < 1e-8);
        assert!((probit(0.9) + probit(0.1)).abs() < 1e-12);
    }

    #[test]
    fn clip_follows_a_drifting_median() {
        let demo = ClipDemo { rounds: 600, norm_decay: 0.998, ..ClipDemo::default() };
        let t = adaptive_clip_native(&demo).unwrap();
        assert_eq!(t.clip.len(), demo.rounds + 1);
        assert_eq!(t.quantile.len(), demo.rounds);
        let tail = &t.clip[400..600];
        let target = &t.quantile[400..600];
        let mean_ratio = tail.iter().zip(target).map(|(c, q)| c / q).sum::<f64>() / 200.0;
        assert!((mean_ratio - 1.0).abs() < 0.15, "{mean_ratio}");
        assert_eq!(t, adaptive_clip_native(&demo).unwrap());
        assert!(adaptive_clip_native(&ClipDemo { target_quantile: 1.0, ..demo }).is_err());
    }

    #[test]
    fn shared_weight_raises_mean_correlation() {
        let low = synthetic_load_native(6, 14, 0.0, 0.03, 4).unwrap();
        let high = synthetic_load_native(6, 14, 0.9, 0.03, 4).unwrap();
        assert!(high.mean_correlation > low.mean_correlation + 0.2);
        assert_eq!(high.values.len(), 6 * 14 * 24);
        assert_eq!(high.correlation.len(), 36);
        assert!((0..6).all(|i| high.correlation[i * 7] == 1.0));
        assert!(synthetic_load_native(0, 14, 0.5, 0.03, 4).is_err());
    }
}
