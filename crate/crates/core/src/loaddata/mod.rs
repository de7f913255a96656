//! Smart-meter data: ingestion, the four-step treatment (hourly resampling,
//! cleaning, min-max scaling, chronological split), supervised windowing and
//! a synthetic household generator.

mod csv_io;
mod synthetic;
mod treatment;
mod window;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

pub use csv_io::{ingest_csv, ingest_reader, write_csv};
pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use treatment::{
    clean, fit_scaler, outlier_threshold, resample_hourly, split_train_validation, Scaled,
    ScalerParams,
};
pub use window::{make_windows, SupervisedWindowSet};

use crate::Result;

/// Sampling cadence of a meter series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    HalfHour,
    Hour,
}

impl Resolution {
    pub fn step(self) -> Duration {
        match self {
            Resolution::HalfHour => Duration::minutes(30),
            Resolution::Hour => Duration::hours(1),
        }
    }
}

impl std::str::FromStr for Resolution {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half-hour" | "halfhour" | "30min" => Ok(Resolution::HalfHour),
            "hourly" | "hour" | "1h" => Ok(Resolution::Hour),
            other => Err(crate::Error::Config(format!("unknown cadence '{other}'"))),
        }
    }
}

/// One household's consumption series. Missing readings are stored as `NaN`
/// until [`clean`] fills them.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub client_id: String,
    pub acorn_group: String,
    pub start: NaiveDateTime,
    pub resolution: Resolution,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, index: usize) -> NaiveDateTime {
        self.start + self.resolution.step() * index as i32
    }

    /// Copy of `self` restricted to `range`, with `start` moved accordingly.
    pub fn slice(&self, range: std::ops::Range<usize>) -> TimeSeries {
        TimeSeries {
            client_id: self.client_id.clone(),
            acorn_group: self.acorn_group.clone(),
            start: self.timestamp(range.start),
            resolution: self.resolution,
            values: self.values[range].to_vec(),
        }
    }
}

/// Knobs of the preparation pipeline that turns a raw series into training
/// and validation windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrepConfig {
    pub lookback: usize,
    pub horizon: usize,
    pub train_fraction: f64,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            lookback: 24,
            horizon: 1,
            train_fraction: 0.75,
        }
    }
}

/// A client's data after treatment: scaled training and validation windows.
#[derive(Debug, Clone)]
pub struct ClientDataset {
    pub client_id: String,
    pub acorn_group: String,
    pub scaler: ScalerParams,
    /// Cleaned, unscaled training portion (used for correlation analysis).
    pub train_series: Vec<f64>,
    pub train: SupervisedWindowSet,
    pub validation: SupervisedWindowSet,
    /// Validation readings that fell outside the training min/max.
    pub validation_out_of_range: usize,
}

/// Run the treatment on one series: resample if half-hourly, clean, split
/// chronologically, fit the scaler on the training part and window both
/// parts.
pub fn prepare_client(series: &TimeSeries, prep: &PrepConfig) -> Result<ClientDataset> {
    let hourly = match series.resolution {
        Resolution::HalfHour => resample_hourly(series)?,
        Resolution::Hour => series.clone(),
    };
    let cleaned = clean(&hourly)?;
    let (train, valid) = split_train_validation(&cleaned, prep.train_fraction)?;
    let scaler = fit_scaler(&train.values)?;
    let train_scaled = scaler.scale(&train.values);
    let valid_scaled = scaler.scale(&valid.values);
    Ok(ClientDataset {
        client_id: series.client_id.clone(),
        acorn_group: series.acorn_group.clone(),
        scaler,
        train: make_windows(&train_scaled.values, prep.lookback, prep.horizon, scaler)?,
        validation: make_windows(&valid_scaled.values, prep.lookback, prep.horizon, scaler)?,
        train_series: train.values,
        validation_out_of_range: valid_scaled.out_of_range,
    })
}

/// [`prepare_client`] over a list of series.
pub fn prepare_all(series: &[TimeSeries], prep: &PrepConfig) -> Result<Vec<ClientDataset>> {
    series.iter().map(|s| prepare_client(s, prep)).collect()
}

/// Concatenate the windows of several clients into one pooled set, as the
/// centralized setting does. The pooled scaler is that of the first client
/// and only serves as metadata.
pub fn pool_windows<'a>(
    sets: impl IntoIterator<Item = &'a SupervisedWindowSet>,
) -> Option<SupervisedWindowSet> {
    let mut iter = sets.into_iter();
    let mut pooled = iter.next()?.clone();
    for set in iter {
        pooled.extend(set);
    }
    Some(pooled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prepare_client_produces_windows_on_both_splits() {
        let spec = SyntheticSpec {
            n_clients: 1,
            days: 10,
            ..SyntheticSpec::default()
        };
        let series = generate_synthetic(&spec).unwrap();
        let data = prepare_client(&series[0], &PrepConfig::default()).unwrap();
        assert_eq!(data.train.len(), 180 - 24);
        assert_eq!(data.validation.len(), 60 - 24);
        assert!(data.train.inputs().iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
