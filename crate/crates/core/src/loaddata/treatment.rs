use serde::{Deserialize, Serialize};

use super::{Resolution, TimeSeries};
use crate::{Error, Result};

/// Number of standard deviations above the mean beyond which a reading is
/// considered an outlier.
pub const OUTLIER_SIGMAS: f64 = 6.0;

/// Sum consecutive half-hour pairs into hourly readings.
pub fn resample_hourly(raw: &TimeSeries) -> Result<TimeSeries> {
    if raw.resolution != Resolution::HalfHour {
        return Err(Error::Resample("input is not half-hourly".into()));
    }
    if !raw.len().is_multiple_of(2) {
        return Err(Error::Resample(format!(
            "odd number of half-hour readings ({})",
            raw.len()
        )));
    }
    Ok(TimeSeries {
        client_id: raw.client_id.clone(),
        acorn_group: raw.acorn_group.clone(),
        start: raw.start,
        resolution: Resolution::Hour,
        values: raw.values.chunks_exact(2).map(|p| p[0] + p[1]).collect(),
    })
}

fn is_valid(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

/// Threshold above which readings are clamped, or `None` when the series has
/// no outliers.
///
/// The largest remaining reading is flagged while it exceeds
/// `mean + 6·std` of the readings below it; the threshold is then
/// `mean + 6·std` (population std) of the unflagged readings. Missing values
/// are ignored.
pub fn outlier_threshold(values: &[f64]) -> Option<f64> {
    let mut sorted: Vec<f64> = values.iter().copied().filter(|v| is_valid(*v)).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut sum: f64 = sorted.iter().sum();
    let mut sumsq: f64 = sorted.iter().map(|v| v * v).sum();
    let stats = |sum: f64, sumsq: f64, n: usize| {
        let mean = sum / n as f64;
        let var = (sumsq / n as f64 - mean * mean).max(0.0);
        mean + OUTLIER_SIGMAS * var.sqrt()
    };

    let mut flagged = 0;
    while sorted.len() - flagged >= 3 {
        let top = sorted[flagged];
        let rest = sorted.len() - flagged - 1;
        let threshold = stats(sum - top, sumsq - top * top, rest);
        if top > threshold {
            flagged += 1;
            sum -= top;
            sumsq -= top * top;
        } else {
            break;
        }
    }
    if flagged == 0 {
        return None;
    }
    Some(stats(sum, sumsq, sorted.len() - flagged))
}

/// Clamp outliers and fill missing or negative readings by linear
/// interpolation. Leading and trailing gaps take the nearest valid value.
pub fn clean(series: &TimeSeries) -> Result<TimeSeries> {
    let values = &series.values;
    if !values.iter().any(|v| is_valid(*v)) {
        return Err(Error::Cleaning(format!(
            "series {} has no valid readings",
            series.client_id
        )));
    }
    let threshold = outlier_threshold(values);
    let mut out: Vec<f64> = values
        .iter()
        .map(|&v| match (is_valid(v), threshold) {
            (false, _) => f64::NAN,
            (true, Some(t)) if v > t => t,
            (true, _) => v,
        })
        .collect();

    let mut prev: Option<usize> = None;
    let mut i = 0;
    while i < out.len() {
        if !out[i].is_nan() {
            prev = Some(i);
            i += 1;
            continue;
        }
        let gap_start = i;
        while i < out.len() && out[i].is_nan() {
            i += 1;
        }
        let next = (i < out.len()).then_some(i);
        match (prev, next) {
            (Some(p), Some(n)) => {
                let (a, b) = (out[p], out[n]);
                let span = (n - p) as f64;
                for (k, slot) in out.iter_mut().enumerate().take(n).skip(gap_start) {
                    *slot = a + (b - a) * (k - p) as f64 / span;
                }
            }
            (Some(p), None) => {
                let a = out[p];
                out[gap_start..].iter_mut().for_each(|v| *v = a);
            }
            (None, Some(n)) => {
                let b = out[n];
                out[..n].iter_mut().for_each(|v| *v = b);
            }
            (None, None) => unreachable!("at least one valid reading"),
        }
    }

    Ok(TimeSeries {
        values: out,
        ..series.clone()
    })
}

/// Min-max scaler parameters, fitted on training data only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: f64,
    pub max: f64,
}

/// Output of [`ScalerParams::scale`]: values outside the fitted range are
/// extended linearly and counted.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaled {
    pub values: Vec<f64>,
    pub out_of_range: usize,
}

pub fn fit_scaler(train: &[f64]) -> Result<ScalerParams> {
    if train.iter().any(|v| !v.is_finite()) {
        return Err(Error::Scaler("non-finite training value".into()));
    }
    let min = train.iter().copied().fold(f64::INFINITY, f64::min);
    let max = train.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if train.is_empty() || max <= min {
        return Err(Error::Scaler("training data is constant or empty".into()));
    }
    Ok(ScalerParams { min, max })
}

impl ScalerParams {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    pub fn scale_value(&self, v: f64) -> f64 {
        (v - self.min) / self.range()
    }

    pub fn unscale_value(&self, v: f64) -> f64 {
        v * self.range() + self.min
    }

    pub fn scale(&self, values: &[f64]) -> Scaled {
        let values: Vec<f64> = values.iter().map(|&v| self.scale_value(v)).collect();
        let out_of_range = values.iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
        Scaled {
            values,
            out_of_range,
        }
    }

    pub fn unscale(&self, scaled: &[f64]) -> Vec<f64> {
        scaled.iter().map(|&v| self.unscale_value(v)).collect()
    }
}

/// Chronological split; the training part has `round(len · fraction)`
/// readings, kept within `1..len`.
pub fn split_train_validation(
    series: &TimeSeries,
    train_fraction: f64,
) -> Result<(TimeSeries, TimeSeries)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Split(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let n = series.len();
    if n < 2 {
        return Err(Error::Split(format!("series of length {n} cannot be split")));
    }
    let cut = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    Ok((series.slice(0..cut), series.slice(cut..n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn series(values: Vec<f64>, resolution: Resolution) -> TimeSeries {
        TimeSeries {
            client_id: "c".into(),
            acorn_group: "g".into(),
            start: NaiveDate::from_ymd_opt(2013, 1, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap(),
            resolution,
            values,
        }
    }

    #[test]
    fn resample_examples() {
        let r = |v: Vec<f64>| resample_hourly(&series(v, Resolution::HalfHour)).unwrap().values;
        assert_eq!(r(vec![0.3, 0.4]), vec![0.7]);
        assert_eq!(r(vec![0.0; 4]), vec![0.0, 0.0]);
        assert_eq!(r(vec![1.0, 2.0, 3.0, 4.0]), vec![3.0, 7.0]);
        assert!(matches!(
            resample_hourly(&series(vec![1.0, 2.0, 3.0], Resolution::HalfHour)),
            Err(Error::Resample(_))
        ));
    }

    #[test]
    fn clean_interpolates_nulls() {
        let s = series(vec![1.0, f64::NAN, 3.0], Resolution::Hour);
        assert_eq!(clean(&s).unwrap().values, vec![1.0, 2.0, 3.0]);
        let s = series(vec![1.0, 2.0, 3.0], Resolution::Hour);
        assert_eq!(clean(&s).unwrap().values, vec![1.0, 2.0, 3.0]);
        let s = series(vec![f64::NAN, 2.0, f64::NAN, f64::NAN, 5.0, f64::NAN], Resolution::Hour);
        assert_eq!(clean(&s).unwrap().values, vec![2.0, 2.0, 3.0, 4.0, 5.0, 5.0]);
    }

    #[test]
    fn clean_clamps_outlier_to_threshold_of_inliers() {
        // inliers are {1, 1}: mean 1, std 0, threshold 1
        let inliers = [1.0f64, 1.0];
        let mean = inliers.iter().sum::<f64>() / 2.0;
        let std = (inliers.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
        let expected = mean + 6.0 * std;
        let s = series(vec![1.0, 1000.0, 1.0], Resolution::Hour);
        assert_eq!(clean(&s).unwrap().values, vec![1.0, expected, 1.0]);
    }

    #[test]
    fn clean_rejects_all_null() {
        let s = series(vec![f64::NAN; 3], Resolution::Hour);
        assert!(matches!(clean(&s), Err(Error::Cleaning(_))));
    }

    #[test]
    fn clean_leaves_gaussian_like_data_alone() {
        let values: Vec<f64> = (0..500).map(|i| 1.0 + (i as f64 * 0.37).sin()).collect();
        assert_eq!(outlier_threshold(&values), None);
    }

    #[test]
    fn scaler_examples() {
        let p = fit_scaler(&[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(p.scale(&[2.0, 4.0, 6.0]).values, vec![0.0, 0.5, 1.0]);
        assert_eq!(p.unscale(&[0.5]), vec![4.0]);
        let s = p.scale(&[8.0]);
        assert_eq!(s.values, vec![1.5]);
        assert_eq!(s.out_of_range, 1);
        assert!(matches!(fit_scaler(&[3.0, 3.0]), Err(Error::Scaler(_))));
    }

    #[test]
    fn split_examples() {
        let s = series((0..100).map(f64::from).collect(), Resolution::Hour);
        let (a, b) = split_train_validation(&s, 0.75).unwrap();
        assert_eq!((a.len(), b.len()), (75, 25));
        assert!(a.timestamp(a.len() - 1) < b.start);
        let s = series((0..10).map(f64::from).collect(), Resolution::Hour);
        let (a, b) = split_train_validation(&s, 0.5).unwrap();
        assert_eq!((a.len(), b.len()), (5, 5));
        let s = series(vec![1.0], Resolution::Hour);
        assert!(split_train_validation(&s, 0.75).is_err());
    }

    proptest! {
        #[test]
        fn unscale_inverts_scale(
            lo in -1e3f64..1e3,
            width in 1e-3f64..1e3,
            xs in proptest::collection::vec(-1e4f64..1e4, 1..50),
        ) {
            let p = ScalerParams { min: lo, max: lo + width };
            let back = p.unscale(&p.scale(&xs).values);
            for (x, y) in xs.iter().zip(back) {
                prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn resampling_preserves_totals(units in proptest::collection::vec(0u32..4096, 1..100)) {
            // dyadic values keep every partial sum exact
            let mut vals: Vec<f64> = units.iter().map(|u| *u as f64 / 1024.0).collect();
            if vals.len() % 2 == 1 { vals.push(0.0); }
            let total: f64 = vals.iter().sum();
            let hourly = resample_hourly(&series(vals, Resolution::HalfHour)).unwrap();
            prop_assert_eq!(hourly.values.iter().sum::<f64>(), total);
        }

        #[test]
        fn split_is_chronological(n in 2usize..500, f in 0.01f64..0.99) {
            let s = series(vec![1.0; n], Resolution::Hour);
            let (a, b) = split_train_validation(&s, f).unwrap();
            prop_assert_eq!(a.len() + b.len(), n);
            prop_assert!(a.timestamp(a.len() - 1) < b.start);
        }
    }
}
