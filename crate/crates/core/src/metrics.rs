//! Forecast error metrics: MSE, RMSE, MAE and MAPE, with `x` the actual and
//! `y` the predicted value.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Actual values with magnitude below this are excluded from MAPE.
pub const MAPE_ZERO_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Percentage points.
    pub mape: f64,
    pub n_used: usize,
    pub n_skipped_zero_actual: usize,
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "mse,rmse,mae,mape";

    /// Compute all four metrics.
    pub fn compute(actual: &[f64], predicted: &[f64]) -> Result<Self> {
        let mse = mse(actual, predicted)?;
        let (mape, skipped) = mape(actual, predicted)?;
        Ok(MetricsReport {
            mse,
            rmse: mse.sqrt(),
            mae: mae(actual, predicted)?,
            mape,
            n_used: actual.len() - skipped,
            n_skipped_zero_actual: skipped,
        })
    }

    /// One CSV row in table order: MSE, RMSE, MAE, MAPE.
    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.mse, self.rmse, self.mae, self.mape)
    }
}

fn check(actual: &[f64], predicted: &[f64]) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Metric(format!(
            "length mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Metric("empty input".into()));
    }
    if actual.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(Error::Metric("non-finite entry".into()));
    }
    Ok(())
}

pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    let sum: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(x, y)| (y - x) * (y - x))
        .sum();
    Ok(sum / actual.len() as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    mse(actual, predicted).map(f64::sqrt)
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check(actual, predicted)?;
    let sum: f64 = actual.iter().zip(predicted).map(|(x, y)| (y - x).abs()).sum();
    Ok(sum / actual.len() as f64)
}

/// MAPE in percent over entries with `|actual| ≥ MAPE_ZERO_FLOOR`, plus the
/// number of skipped entries.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<(f64, usize)> {
    check(actual, predicted)?;
    let mut sum = 0.0;
    let mut used = 0usize;
    for (x, y) in actual.iter().zip(predicted) {
        if x.abs() >= MAPE_ZERO_FLOOR {
            sum += ((x - y) / x).abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::Metric("all actual values are zero".into()));
    }
    Ok((100.0 * sum / used as f64, actual.len() - used))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn metric_examples() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(mae(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), 1.5);
        assert_eq!(mape(&[1.0, 2.0], &[2.0, 4.0]).unwrap(), (100.0, 0));
        assert_eq!(mape(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), (0.0, 0));
        assert_eq!(mape(&[0.0, 1.0], &[5.0, 1.0]).unwrap(), (0.0, 1));
    }

    #[test]
    fn metric_errors() {
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae(&[], &[]).is_err());
        assert!(mape(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn report_row_order() {
        let r = MetricsReport::compute(&[1.0, 2.0], &[2.0, 4.0]).unwrap();
        assert_eq!(r.csv_row(), format!("2.5,{},1.5,100", 2.5f64.sqrt()));
    }

    proptest! {
        #[test]
        fn rmse_squared_is_mse(pairs in proptest::collection::vec((-10f64..10.0, -10f64..10.0), 1..60)) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let m = mse(&a, &p).unwrap();
            let r = rmse(&a, &p).unwrap();
            prop_assert!((r * r - m).abs() <= 1e-12 * m.max(f64::MIN_POSITIVE));
            prop_assert!(m >= 0.0 && mae(&a, &p).unwrap() >= 0.0);
        }

        #[test]
        fn permutation_invariance(
            pairs in proptest::collection::vec((-10f64..10.0, -10f64..10.0), 2..40),
            rot in 0usize..40,
        ) {
            let (a, p): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
            let mut rotated = pairs.clone();
            rotated.rotate_left(rot % pairs.len());
            let (ra, rp): (Vec<f64>, Vec<f64>) = rotated.into_iter().unzip();
            prop_assert!((mse(&a, &p).unwrap() - mse(&ra, &rp).unwrap()).abs() < 1e-12);
            prop_assert!((mae(&a, &p).unwrap() - mae(&ra, &rp).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn zero_iff_equal(a in proptest::collection::vec(0.1f64..10.0, 1..30), bump in 0usize..30) {
            let mut p = a.clone();
            prop_assert_eq!(MetricsReport::compute(&a, &p).unwrap().mape, 0.0);
            let i = bump % a.len();
            p[i] += 0.5;
            let r = MetricsReport::compute(&a, &p).unwrap();
            prop_assert!(r.mse > 0.0 && r.mae > 0.0 && r.rmse > 0.0 && r.mape > 0.0);
        }
    }
}
