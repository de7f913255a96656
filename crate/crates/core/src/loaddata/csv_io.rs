use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;

use super::{Resolution, TimeSeries};
use crate::{Error, Result};

pub const HEADER: [&str; 4] = ["client_id", "acorn_group", "timestamp_iso8601", "kwh"];

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%d %H:%M:%S%.f",
];

fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let trimmed = raw.trim().trim_end_matches('Z');
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(trimmed, fmt).ok())
}

/// Missing markers as they appear in meter exports. Anything else that is
/// not a number is a schema violation.
fn parse_kwh(raw: &str) -> Option<f64> {
    let trimmed = raw.trim();
    if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("null") || trimmed == "NA" {
        return Some(f64::NAN);
    }
    trimmed.parse::<f64>().ok()
}

/// Read a meter CSV (`client_id,acorn_group,timestamp_iso8601,kwh`).
pub fn ingest_csv(path: impl AsRef<Path>, cadence: Resolution) -> Result<Vec<TimeSeries>> {
    let file = std::fs::File::open(path)?;
    ingest_reader(file, cadence)
}

/// Like [`ingest_csv`] but from any reader. Output is sorted by client id;
/// gaps in a client's timestamp grid are filled with `NaN`.
pub fn ingest_reader<R: Read>(reader: R, cadence: Resolution) -> Result<Vec<TimeSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);

    let mut per_client: BTreeMap<String, (String, BTreeMap<NaiveDateTime, f64>)> = BTreeMap::new();
    let mut seen_header = false;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if !seen_header {
            let names: Vec<&str> = record.iter().map(str::trim).collect();
            if names != HEADER {
                return Err(Error::Parse {
                    line,
                    message: format!("expected header {}", HEADER.join(",")),
                });
            }
            seen_header = true;
            continue;
        }
        if record.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let client = record[0].trim().to_string();
        let acorn = record[1].trim().to_string();
        if client.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty client_id".into(),
            });
        }
        let ts = parse_timestamp(&record[2]).ok_or_else(|| Error::Parse {
            line,
            message: format!("bad timestamp '{}'", &record[2]),
        })?;
        let kwh = parse_kwh(&record[3]).ok_or_else(|| Error::Parse {
            line,
            message: format!("non-numeric kwh '{}'", &record[3]),
        })?;

        let entry = per_client
            .entry(client.clone())
            .or_insert_with(|| (acorn.clone(), BTreeMap::new()));
        if entry.0 != acorn {
            return Err(Error::Ingestion(format!(
                "client {client} has conflicting acorn groups '{}' and '{acorn}'",
                entry.0
            )));
        }
        if entry.1.insert(ts, kwh).is_some() {
            return Err(Error::Ingestion(format!(
                "duplicate reading for client {client} at {ts} (line {line})"
            )));
        }
    }

    let step = cadence.step();
    per_client
        .into_iter()
        .map(|(client_id, (acorn_group, readings))| {
            let start = *readings.keys().next().expect("client has at least one row");
            let last = *readings.keys().next_back().expect("non-empty");
            let span = (last - start).num_seconds();
            if span % step.num_seconds() != 0 {
                return Err(Error::Ingestion(format!(
                    "client {client_id}: timestamps are not on a {cadence:?} grid"
                )));
            }
            let len = (span / step.num_seconds()) as usize + 1;
            let mut values = vec![f64::NAN; len];
            for (ts, kwh) in readings {
                let offset = (ts - start).num_seconds();
                if offset % step.num_seconds() != 0 {
                    return Err(Error::Ingestion(format!(
                        "client {client_id}: timestamp {ts} off the {cadence:?} grid"
                    )));
                }
                values[(offset / step.num_seconds()) as usize] = kwh;
            }
            Ok(TimeSeries {
                client_id,
                acorn_group,
                start,
                resolution: cadence,
                values,
            })
        })
        .collect()
}

/// Write series in the ingestion schema. Missing values are written as
/// empty fields.
pub fn write_csv<W: Write>(series: &[TimeSeries], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(HEADER).map_err(csv_err)?;
    for s in series {
        for (i, v) in s.values.iter().enumerate() {
            let ts = s.timestamp(i).format("%Y-%m-%dT%H:%M:%S").to_string();
            let kwh = if v.is_nan() {
                String::new()
            } else {
                format!("{v}")
            };
            wtr.write_record([s.client_id.as_str(), s.acorn_group.as_str(), &ts, &kwh])
                .map_err(csv_err)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
