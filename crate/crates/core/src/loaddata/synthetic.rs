use std::f64::consts::TAU;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Resolution, TimeSeries};
use crate::{seed, Error, Result};

/// Parameters of the synthetic household generator.
///
/// Each client's hourly load is
/// `base + ρ·shared(t) + (1−ρ)·private_k(t) + noise`, floored at zero, where
/// both profiles combine a two-harmonic daily cycle and a weekly cycle.
/// `shared_weight` (ρ) therefore controls how correlated the clients are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_clients: usize,
    pub days: usize,
    pub base_load: f64,
    pub daily_amplitude: f64,
    pub weekly_amplitude: f64,
    pub noise_std: f64,
    pub shared_weight: f64,
    pub seed: u64,
    pub acorn_group: String,
    pub id_prefix: String,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_clients: 10,
            days: 28,
            base_load: 0.6,
            daily_amplitude: 0.4,
            weekly_amplitude: 0.1,
            noise_std: 0.03,
            shared_weight: 0.7,
            seed: 0,
            acorn_group: "ACORN-SYN".into(),
            id_prefix: "SYN".into(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.n_clients >= 1
            && self.days >= 1
            && (0.0..=1.0).contains(&self.shared_weight)
            && self.noise_std >= 0.0
            && self.daily_amplitude >= 0.0
            && self.weekly_amplitude >= 0.0
            && self.base_load.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid synthetic spec {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Profile {
    daily: f64,
    weekly: f64,
    phase_1: f64,
    phase_2: f64,
    phase_week: f64,
}

impl Profile {
    fn draw<R: Rng>(rng: &mut R, daily: f64, weekly: f64) -> Self {
        Profile {
            daily,
            weekly,
            phase_1: rng.random_range(0.0..TAU),
            phase_2: rng.random_range(0.0..TAU),
            phase_week: rng.random_range(0.0..TAU),
        }
    }

    fn at(&self, hour: usize) -> f64 {
        let t = hour as f64;
        let day = TAU * t / 24.0;
        self.daily * (0.6 * (day + self.phase_1).sin() + 0.4 * (2.0 * day + self.phase_2).sin())
            + self.weekly * (TAU * t / 168.0 + self.phase_week).sin()
    }
}

/// Generate `n_clients` hourly series starting 2013-01-01.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Vec<TimeSeries>> {
    spec.validate()?;
    let hours = spec.days * 24;
    let start = NaiveDate::from_ymd_opt(2013, 1, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date");
    let mut shared_rng = seed::child_rng(spec.seed, "synthetic-shared", 0);
    let shared = Profile::draw(&mut shared_rng, spec.daily_amplitude, spec.weekly_amplitude);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let rho = spec.shared_weight;

    Ok((0..spec.n_clients)
        .map(|k| {
            let mut rng = seed::child_rng(spec.seed, "synthetic-client", k as u64);
            let jitter_d = rng.random_range(0.7..1.3);
            let jitter_w = rng.random_range(0.7..1.3);
            let private = Profile::draw(
                &mut rng,
                spec.daily_amplitude * jitter_d,
                spec.weekly_amplitude * jitter_w,
            );
            let values = (0..hours)
                .map(|t| {
                    let eps = if spec.noise_std > 0.0 {
                        noise.sample(&mut rng)
                    } else {
                        0.0
                    };
                    let v = spec.base_load + rho * shared.at(t) + (1.0 - rho) * private.at(t) + eps;
                    v.max(0.0)
                })
                .collect();
            TimeSeries {
                client_id: format!("{}{:04}", spec.id_prefix, k),
                acorn_group: spec.acorn_group.clone(),
                start,
                resolution: Resolution::Hour,
                values,
            }
        })
        .collect())
}
