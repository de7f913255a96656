use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ClippingMode, ScenarioId};
use super::run::{ResultRow, RowKind, ScenarioResult};
use crate::federation::RoundReport;
use crate::metrics::MetricsReport;
use crate::Result;

/// Header of the main result table of `result`.
pub fn table_header(result: &ScenarioResult) -> &'static str {
    match (result.scenario, result.clipping) {
        (ScenarioId::Central, _) => "central_dataset_size,mse,rmse,mae,mape,time_per_epoch_s",
        (ScenarioId::B, _) => "federation_size,mse,rmse,mae,mape,correlation_rate",
        (ScenarioId::D, Some(ClippingMode::Adaptive)) => {
            "noise_scale,effective_noise,epsilon,delta,mse,rmse,mae,mape,time_per_round_s"
        }
        (ScenarioId::D, _) => "noise_scale,epsilon,delta,mse,rmse,mae,mape,time_per_round_s",
        _ => "federation_size,mse,rmse,mae,mape,time_per_round_s",
    }
}

/// Header of the scenario D clip-norm table.
pub const CLIP_SWEEP_HEADER: &str = "clip_norm,mse,rmse,mae,mape";

fn num(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

fn metrics(m: &MetricsReport) -> String {
    format!("{},{},{},{}", m.mse, m.rmse, m.mae, m.mape)
}

/// One line of the main table, in [`table_header`] order.
pub fn table_row(result: &ScenarioResult, row: &ResultRow) -> String {
    let m = metrics(&row.validation);
    match (result.scenario, result.clipping) {
        (ScenarioId::B, _) => format!(
            "{},{m},{}",
            row.federation_size,
            num(row.correlation_rate)
        ),
        (ScenarioId::D, Some(ClippingMode::Adaptive)) => format!(
            "{},{},{},{},{m},{}",
            num(row.noise_scale),
            num(row.effective_noise),
            num(row.epsilon),
            num(row.delta),
            row.seconds_per_step
        ),
        (ScenarioId::D, _) => format!(
            "{},{},{},{m},{}",
            num(row.noise_scale),
            num(row.epsilon),
            num(row.delta),
            row.seconds_per_step
        ),
        _ => format!("{},{m},{}", row.federation_size, row.seconds_per_step),
    }
}

/// The main table as CSV text.
pub fn table_csv(result: &ScenarioResult) -> String {
    let kind = match result.scenario {
        ScenarioId::D => RowKind::NoiseSweep,
        _ => RowKind::Size,
    };
    let mut out = format!("{}\n", table_header(result));
    for row in result.rows_of(kind) {
        out.push_str(&table_row(result, row));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct LoggedRound<'a> {
    series: String,
    #[serde(flatten)]
    report: &'a RoundReport,
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(path)
}

/// Write the result files into `dir` and return their paths:
///
/// * `results.csv`: the main table;
/// * `clip_sweep.csv`: scenario D fixed clip norms;
/// * `splits.csv`: validation and training metrics of every row;
/// * `mape_curves.csv`: validation MAPE per round, one series per row;
/// * `rounds.jsonl`: one JSON object per round and row;
/// * `clip_trajectory.csv`: adaptive clip norms per round;
/// * `secagg_transcript.jsonl`: last-round secure aggregation messages;
/// * `config.toml` and `fingerprint.txt`: the resolved configuration.
pub fn emit_report(result: &ScenarioResult, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    files.push(write_file(dir, "results.csv", |w| {
        w.write_all(table_csv(result).as_bytes())?;
        Ok(())
    })?);
    if result.rows_of(RowKind::ClipSweep).next().is_some() {
        files.push(write_file(dir, "clip_sweep.csv", |w| {
            writeln!(w, "{CLIP_SWEEP_HEADER}")?;
            for row in result.rows_of(RowKind::ClipSweep) {
                writeln!(w, "{},{}", num(row.clip_norm), metrics(&row.validation))?;
            }
            Ok(())
        })?);
    }
    files.push(write_file(dir, "splits.csv", |w| {
        writeln!(w, "series,split,mse,rmse,mae,mape")?;
        for row in &result.rows {
            let name = row.series_name();
            writeln!(w, "{name},validation,{}", metrics(&row.validation))?;
            writeln!(w, "{name},train,{}", metrics(&row.train))?;
        }
        Ok(())
    })?);
    files.push(write_file(dir, "mape_curves.csv", |w| {
        writeln!(w, "series,round,mape")?;
        for row in &result.rows {
            let name = row.series_name();
            for (i, m) in row.mape_curve.iter().enumerate() {
                writeln!(w, "{name},{},{m}", i + 1)?;
            }
        }
        Ok(())
    })?);
    if result.rows.iter().any(|r| !r.rounds.is_empty()) {
        files.push(write_file(dir, "rounds.jsonl", |w| {
            for row in &result.rows {
                for report in &row.rounds {
                    let line = LoggedRound {
                        series: row.series_name(),
                        report,
                    };
                    serde_json::to_writer(&mut *w, &line)?;
                    writeln!(w)?;
                }
            }
            Ok(())
        })?);
    }
    if result.rows.iter().any(|r| r.clip_trajectory.is_some()) {
        files.push(write_file(dir, "clip_trajectory.csv", |w| {
            writeln!(w, "series,round,clip_norm")?;
            for row in &result.rows {
                for (round, c) in row.clip_trajectory.iter().flatten() {
                    writeln!(w, "{},{round},{c}", row.series_name())?;
                }
            }
            Ok(())
        })?);
    }
    if result.rows.iter().any(|r| !r.transcript.is_empty()) {
        files.push(write_file(dir, "secagg_transcript.jsonl", |w| {
            for row in &result.rows {
                for event in &row.transcript {
                    serde_json::to_writer(&mut *w, &(row.series_name(), event))?;
                    writeln!(w)?;
                }
            }
            Ok(())
        })?);
    }
    files.push(write_file(dir, "config.toml", |w| {
        w.write_all(result.config.to_toml_string()?.as_bytes())?;
        Ok(())
    })?);
    files.push(write_file(dir, "fingerprint.txt", |w| {
        writeln!(w, "{}", result.fingerprint)?;
        Ok(())
    })?);
    Ok(files)
}
