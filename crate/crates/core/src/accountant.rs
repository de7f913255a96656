//! Rényi-DP accounting for the subsampled Gaussian mechanism, composed over
//! rounds and converted to an (ε, δ) guarantee.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default RDP orders: the integers 2..=64 plus 128 and 256.
pub fn default_orders() -> Vec<f64> {
    (2..=64).chain([128, 256]).map(f64::from).collect()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Accountant(format!("order {alpha} must be finite and > 1")))
    }
}

fn check_z(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::Accountant(format!("noise multiplier {z} must be > 0")))
    }
}

/// RDP of the Gaussian mechanism with sensitivity 1 and noise multiplier
/// `z`: `α / (2z²)`.
pub fn rdp_gaussian(alpha: f64, z: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_z(z)?;
    Ok(alpha / (2.0 * z * z))
}

/// RDP of the Poisson-subsampled Gaussian mechanism at order `alpha`.
///
/// For integer orders this is the binomial expansion
/// `A_α = Σ_i C(α,i) q^i (1−q)^(α−i) exp((i²−i)/(2z²))`, evaluated in log
/// space, and the RDP is `ln A_α / (α−1)`. A fractional order is bounded by
/// the value at `⌈α⌉`, since RDP is non-decreasing in the order.
pub fn rdp_subsampled_gaussian(alpha: f64, q: f64, z: f64) -> Result<f64> {
    check_alpha(alpha)?;
    check_z(z)?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Accountant(format!("sampling ratio {q} must lie in (0, 1]")));
    }
    if q == 1.0 {
        return rdp_gaussian(alpha, z);
    }
    let order = alpha.ceil();
    if order > 1e6 {
        return Err(Error::Accountant(format!("order {alpha} too large")));
    }
    let n = order as u64;
    let (ln_q, ln_1q) = (q.ln(), (-q).ln_1p());
    let two_z2 = 2.0 * z * z;
    let mut ln_binom = 0.0;
    let mut terms = Vec::with_capacity(n as usize + 1);
    for i in 0..=n {
        if i > 0 {
            ln_binom += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        let fi = i as f64;
        terms.push(ln_binom + fi * ln_q + (order - fi) * ln_1q + (fi * fi - fi) / two_z2);
    }
    let ln_a = log_sum_exp(&terms);
    if !ln_a.is_finite() {
        return Err(Error::Accountant(format!(
            "overflow at order {alpha}, q = {q}, z = {z}"
        )));
    }
    Ok(ln_a.max(0.0) / (order - 1.0))
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// One application of the subsampled Gaussian mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismEvent {
    pub round: usize,
    /// Sampling ratio `q`.
    pub q: f64,
    /// Noise multiplier (`z`, or `z_Δ` under adaptive clipping).
    pub noise_multiplier: f64,
}

/// Append-only list of mechanism events with running per-order totals.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyLedger {
    events: Vec<MechanismEvent>,
    orders: Vec<f64>,
    totals: Vec<f64>,
}

impl Default for PrivacyLedger {
    fn default() -> Self {
        Self::new()
    }
}

impl PrivacyLedger {
    pub fn new() -> Self {
        Self::with_orders(default_orders()).expect("default orders are valid")
    }

    pub fn with_orders(orders: Vec<f64>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::Accountant("empty order grid".into()));
        }
        for &a in &orders {
            check_alpha(a)?;
        }
        Ok(PrivacyLedger {
            totals: vec![0.0; orders.len()],
            events: Vec::new(),
            orders,
        })
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn events(&self) -> &[MechanismEvent] {
        &self.events
    }

    /// Cumulative RDP per order.
    pub fn rdp_totals(&self) -> &[f64] {
        &self.totals
    }

    pub fn push(&mut self, event: MechanismEvent) -> Result<()> {
        if let Some(last) = self.events.last() {
            if event.round < last.round {
                return Err(Error::Accountant(format!(
                    "event for round {} after round {}",
                    event.round, last.round
                )));
            }
        }
        let rdp: Vec<f64> = self
            .orders
            .iter()
            .map(|&a| rdp_subsampled_gaussian(a, event.q, event.noise_multiplier))
            .collect::<Result<_>>()?;
        for (t, r) in self.totals.iter_mut().zip(rdp) {
            *t += r;
        }
        self.events.push(event);
        Ok(())
    }

    /// `rounds` identical events.
    pub fn push_repeated(&mut self, rounds: usize, q: f64, z: f64) -> Result<()> {
        let start = self.events.last().map_or(0, |e| e.round + 1);
        let rdp: Vec<f64> = self
            .orders
            .iter()
            .map(|&a| rdp_subsampled_gaussian(a, q, z))
            .collect::<Result<_>>()?;
        for r in 0..rounds {
            for (t, v) in self.totals.iter_mut().zip(&rdp) {
                *t += v;
            }
            self.events.push(MechanismEvent {
                round: start + r,
                q,
                noise_multiplier: z,
            });
        }
        Ok(())
    }

    /// Per-order breakdown of the conversion to (ε, δ).
    pub fn breakdown(&self, delta: f64) -> Result<Vec<OrderBreakdown>> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Accountant(format!("delta {delta} must lie in (0, 1)")));
        }
        if self.events.is_empty() {
            return Err(Error::Accountant("empty ledger".into()));
        }
        let log_inv_delta = (1.0 / delta).ln();
        Ok(self
            .orders
            .iter()
            .zip(&self.totals)
            .map(|(&alpha, &rdp)| OrderBreakdown {
                alpha,
                rdp,
                epsilon: rdp + log_inv_delta / (alpha - 1.0),
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderBreakdown {
    pub alpha: f64,
    pub rdp: f64,
    pub epsilon: f64,
}

/// `ε = min_α [rdp_total(α) + ln(1/δ)/(α−1)]`; returns `(ε, best α)`.
pub fn compose_and_convert(ledger: &PrivacyLedger, delta: f64) -> Result<(f64, f64)> {
    let rows = ledger.breakdown(delta)?;
    let best = rows
        .iter()
        .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon))
        .expect("non-empty grid");
    Ok((best.epsilon, best.alpha))
}

/// ε after `rounds` identical rounds at sampling ratio `q` and noise `z`.
pub fn epsilon_for(rounds: usize, q: f64, z: f64, delta: f64) -> Result<(f64, f64)> {
    let mut ledger = PrivacyLedger::new();
    ledger.push_repeated(rounds, q, z)?;
    compose_and_convert(&ledger, delta)
}

/// CSV `alpha,rdp,epsilon`.
pub fn write_breakdown_csv<W: Write>(rows: &[OrderBreakdown], mut w: W) -> Result<()> {
    writeln!(w, "alpha,rdp,epsilon")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.alpha, r.rdp, r.epsilon)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_examples() {
        assert_eq!(rdp_gaussian(2.0, 1.0).unwrap(), 1.0);
        assert_eq!(rdp_gaussian(2.0, 2.0).unwrap(), 0.25);
        assert!(rdp_gaussian(1.0, 1.0).is_err());
        assert!(rdp_gaussian(2.0, 0.0).is_err());
        assert!(rdp_gaussian(3.0, 1.0).unwrap() > rdp_gaussian(2.0, 1.0).unwrap());
        assert!(rdp_gaussian(2.0, 1.5).unwrap() < rdp_gaussian(2.0, 1.0).unwrap());
    }

    #[test]
    fn full_sampling_reduces_to_gaussian() {
        for alpha in [2.0, 7.0, 64.0, 2.5] {
            assert_eq!(
                rdp_subsampled_gaussian(alpha, 1.0, 0.8).unwrap(),
                rdp_gaussian(alpha, 0.8).unwrap()
            );
        }
    }

    #[test]
    fn vanishing_sampling_gives_vanishing_rdp() {
        let small = rdp_subsampled_gaussian(8.0, 1e-8, 0.9).unwrap();
        assert!((0.0..1e-12).contains(&small));
    }

    #[test]
    fn fractional_order_uses_next_integer() {
        assert_eq!(
            rdp_subsampled_gaussian(3.2, 0.1, 1.0).unwrap(),
            rdp_subsampled_gaussian(4.0, 0.1, 1.0).unwrap()
        );
    }

    #[test]
    fn single_order_conversion() {
        let mut ledger = PrivacyLedger::with_orders(vec![2.0]).unwrap();
        ledger
            .push(MechanismEvent {
                round: 0,
                q: 0.1,
                noise_multiplier: 1.0,
            })
            .unwrap();
        let (eps, alpha) = compose_and_convert(&ledger, 1e-5).unwrap();
        let expected = rdp_subsampled_gaussian(2.0, 0.1, 1.0).unwrap() + (1e5f64).ln();
        assert!((eps - expected).abs() < 1e-12);
        assert_eq!(alpha, 2.0);
    }

    #[test]
    fn ledger_rules() {
        assert!(compose_and_convert(&PrivacyLedger::new(), 1e-5).is_err());
        let mut ledger = PrivacyLedger::new();
        ledger
            .push(MechanismEvent {
                round: 3,
                q: 0.1,
                noise_multiplier: 1.0,
            })
            .unwrap();
        assert!(ledger
            .push(MechanismEvent {
                round: 2,
                q: 0.1,
                noise_multiplier: 1.0,
            })
            .is_err());
        let one = compose_and_convert(&ledger, 1e-5).unwrap().0;
        ledger.push_repeated(1, 0.1, 1.0).unwrap();
        assert!(compose_and_convert(&ledger, 1e-5).unwrap().0 > one);
    }

    #[test]
    fn breakdown_csv_has_one_row_per_order() {
        let mut ledger = PrivacyLedger::new();
        ledger.push_repeated(10, 0.1, 1.0).unwrap();
        let mut buf = Vec::new();
        write_breakdown_csv(&ledger.breakdown(1e-5).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + default_orders().len());
        assert!(text.starts_with("alpha,rdp,epsilon\n2,"));
    }
}
