//! Differential-privacy mechanics on model updates: flat clipping (fixed or
//! adaptive), the sensitivity bound and server-side Gaussian noise.

use std::io::Write;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::nn::ParamVector;
use crate::{seed, Error, Result};

/// How updates are clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClipConfig {
    /// Flat clipping to a fixed L2 bound `s` (may be infinite).
    Fixed { s: f64 },
    /// Geometric adaptive clipping towards the `target_quantile` of update
    /// norms.
    Adaptive {
        c0: f64,
        eta_c: f64,
        target_quantile: f64,
        sigma_b: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpConfig {
    /// Noise multiplier `z`.
    pub noise_scale: f64,
    pub delta: f64,
    pub clip: ClipConfig,
}

impl DpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return bad(format!("noise scale {} must be ≥ 0", self.noise_scale));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta {} must lie in (0, 1)", self.delta));
        }
        match self.clip {
            ClipConfig::Fixed { s } if !(s > 0.0) => bad(format!("clip norm {s} must be > 0")),
            ClipConfig::Adaptive {
                c0,
                eta_c,
                target_quantile,
                sigma_b,
            } => {
                if !(c0 > 0.0 && c0.is_finite()) {
                    bad(format!("initial clip {c0} must be > 0"))
                } else if !(eta_c > 0.0) {
                    bad(format!("clip step {eta_c} must be > 0"))
                } else if !(target_quantile > 0.0 && target_quantile < 1.0) {
                    bad(format!("target quantile {target_quantile} must lie in (0, 1)"))
                } else if !(sigma_b >= 0.0) {
                    bad(format!("count noise {sigma_b} must be ≥ 0"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Noise multiplier actually applied to the averaged update: `z` for
    /// fixed clipping, the effective `z_Δ` for adaptive clipping.
    pub fn update_noise_multiplier(&self) -> Result<f64> {
        match self.clip {
            ClipConfig::Fixed { .. } => Ok(self.noise_scale),
            ClipConfig::Adaptive { .. } if self.noise_scale == 0.0 => Ok(0.0),
            ClipConfig::Adaptive { sigma_b, .. } => effective_noise(self.noise_scale, sigma_b),
        }
    }
}

/// Scale `update` down to L2 norm `s` if it is longer. Returns the result
/// and whether clipping happened. The output norm never exceeds `s`.
pub fn flat_clip(update: &ParamVector, s: f64) -> Result<(ParamVector, bool)> {
    if !(s > 0.0) {
        return Err(Error::Config(format!("clip norm {s} must be > 0")));
    }
    if !update.is_finite() {
        return Err(Error::NonFinite);
    }
    let norm = update.norm();
    if norm <= s {
        return Ok((update.clone(), false));
    }
    let mut factor = s / norm;
    let mut out = update.scaled(factor);
    // Rounding can leave the rescaled norm an ulp above s.
    while out.norm() > s {
        factor *= 1.0 - f64::EPSILON;
        out = update.scaled(factor);
    }
    Ok((out, true))
}

/// Sensitivity of the averaged update: `s / (q·w)`.
pub fn sensitivity(s: f64, q: f64, w: usize) -> f64 {
    s / (q * w as f64)
}

/// Gaussian noise standard deviation `z·𝕊`.
pub fn noise_sigma(z: f64, sensitivity: f64) -> f64 {
    z * sensitivity
}

/// Add i.i.d. `N(0, σ²)` noise to every coordinate; `σ = 0` returns the
/// input unchanged.
pub fn add_server_noise(aggregate: &ParamVector, sigma: f64, seed: u64) -> Result<ParamVector> {
    if sigma == 0.0 {
        return Ok(aggregate.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = seed::rng(seed);
    let mut out = aggregate.clone();
    for v in &mut out.values {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}

/// `z_Δ = (z⁻² − (2σ_b)⁻²)^(−1/2)`, the update noise multiplier that keeps
/// the overall guarantee at `z` once the clipping count is also noised.
pub fn effective_noise(z: f64, sigma_b: f64) -> Result<f64> {
    let a = z.powi(-2) - (2.0 * sigma_b).powi(-2);
    if a > 0.0 {
        Ok(a.powf(-0.5))
    } else {
        Err(Error::UndefinedEffectiveNoise { z, sigma_b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClipRecord {
    pub round: usize,
    pub clip_norm: f64,
    /// Noised fraction of updates that were within the bound.
    pub unclipped_fraction: f64,
}

/// Current adaptive clip norm and its trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipState {
    pub current: f64,
    pub history: Vec<ClipRecord>,
}

impl ClipState {
    pub fn new(c0: f64) -> Self {
        ClipState {
            current: c0,
            history: Vec::new(),
        }
    }

    /// `(round, C_r)` pairs including the final value.
    pub fn trajectory(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<_> = self.history.iter().map(|r| (r.round, r.clip_norm)).collect();
        out.push((self.history.len(), self.current));
        out
    }

    /// CSV `round,clip_norm`.
    pub fn write_trajectory_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "round,clip_norm")?;
        for (round, c) in self.trajectory() {
            writeln!(w, "{round},{c}")?;
        }
        Ok(())
    }
}

/// One geometric step: `b̃ = b̄ + N(0, σ_b²)/m`,
/// `C ← C·exp(−η_C·(b̃ − γ))`, where `b̄` is the fraction of the `m`
/// participants whose update norm was within the current bound.
pub fn adaptive_clip_update(
    state: &ClipState,
    within_bound: &[bool],
    sigma_b: f64,
    eta_c: f64,
    target_quantile: f64,
    seed: u64,
) -> Result<ClipState> {
    if within_bound.is_empty() {
        return Err(Error::Config("adaptive clipping needs ≥ 1 participant".into()));
    }
    let m = within_bound.len() as f64;
    let b_bar = within_bound.iter().filter(|&&b| b).count() as f64 / m;
    let noise = if sigma_b > 0.0 {
        Normal::new(0.0, sigma_b)
            .map_err(|e| Error::Config(e.to_string()))?
            .sample(&mut seed::rng(seed))
    } else {
        0.0
    };
    let b_tilde = b_bar + noise / m;
    let mut next = state.clone();
    next.history.push(ClipRecord {
        round: state.history.len(),
        clip_norm: state.current,
        unclipped_fraction: b_tilde,
    });
    next.current = state.current * (-eta_c * (b_tilde - target_quantile)).exp();
    Ok(next)
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
    fn flat_clip_examples() {
        let (z, clipped) = flat_clip(&pv(vec![0.0; 3]), 0.1).unwrap();
        assert_eq!(z.values, vec![0.0; 3]);
        assert!(!clipped);

        let (c, clipped) = flat_clip(&pv(vec![0.36, 0.48]), 0.3).unwrap();
        assert!(clipped);
        assert!((c.norm() - 0.3).abs() < 1e-15 && c.norm() <= 0.3);
        assert!((c.values[0] - 0.18).abs() < 1e-15 && (c.values[1] - 0.24).abs() < 1e-15);

        let small = pv(vec![0.12, 0.16]);
        assert_eq!(flat_clip(&small, 0.3).unwrap(), (small, false));

        assert!(matches!(
            flat_clip(&pv(vec![f64::NAN]), 1.0),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn sensitivity_and_sigma_examples() {
        assert!((sensitivity(0.3, 0.1, 100) - 0.03).abs() < 1e-15);
        assert_eq!(sensitivity(0.3, 1.0, 1), 0.3);
        assert_eq!(sensitivity(0.6, 0.5, 4), 2.0 * sensitivity(0.3, 0.5, 4));
        assert!((noise_sigma(0.5, 0.03) - 0.015).abs() < 1e-15);
        assert!((noise_sigma(0.1, 0.03) - 0.003).abs() < 1e-15);
    }

    #[test]
    fn zero_sigma_noise_is_identity() {
        let a = pv(vec![1.0, 2.0]);
        assert_eq!(add_server_noise(&a, 0.0, 9).unwrap(), a);
        let n1 = add_server_noise(&a, 0.1, 9).unwrap();
        assert_eq!(n1, add_server_noise(&a, 0.1, 9).unwrap());
        assert_ne!(n1, a);
    }

    #[test]
    fn effective_noise_examples() {
        assert!((effective_noise(0.2, 0.5).unwrap() - 24f64.powf(-0.5)).abs() < 1e-12);
        assert!((effective_noise(0.2, 1e9).unwrap() - 0.2).abs() < 1e-12);
        assert!(matches!(
            effective_noise(1.0, 0.5),
            Err(Error::UndefinedEffectiveNoise { .. })
        ));
    }

    #[test]
    fn adaptive_update_examples() {
        let s = ClipState::new(0.1);
        let same = adaptive_clip_update(&s, &[true, false], 0.0, 0.2, 0.5, 0).unwrap();
        assert_eq!(same.current, 0.1);
        let down = adaptive_clip_update(&s, &[true, true, true], 0.0, 0.2, 0.5, 0).unwrap();
        assert!((down.current / 0.1 - (-0.1f64).exp()).abs() < 1e-15);
        assert_eq!(down.history.len(), 1);
        assert_eq!(down.trajectory(), vec![(0, 0.1), (1, down.current)]);
    }

    #[test]
    fn dp_config_validation() {
        let ok = DpConfig {
            noise_scale: 0.5,
            delta: 4e-3,
            clip: ClipConfig::Fixed { s: 0.3 },
        };
        assert!(ok.validate().is_ok());
        let inf = DpConfig {
            clip: ClipConfig::Fixed { s: f64::INFINITY },
            ..ok.clone()
        };
        assert!(inf.validate().is_ok());
        for bad in [
            DpConfig {
                delta: 1.0,
                ..ok.clone()
            },
            DpConfig {
                noise_scale: -1.0,
                ..ok.clone()
            },
            DpConfig {
                clip: ClipConfig::Fixed { s: 0.0 },
                ..ok.clone()
            },
            DpConfig {
                clip: ClipConfig::Adaptive {
                    c0: 0.1,
                    eta_c: 0.2,
                    target_quantile: 1.0,
                    sigma_b: 0.5,
                },
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
