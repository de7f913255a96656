use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ClippingMode, DataSource, ScenarioConfig, ScenarioId};
use crate::clustering::{correlation_matrix, select_federation};
use crate::dp::{effective_noise, ClipConfig, DpConfig};
use crate::federation::{run_federated, FedOutcome, RoundReport};
use crate::loaddata::{generate_synthetic, ingest_csv, pool_windows, prepare_all, ClientDataset};
use crate::metrics::MetricsReport;
use crate::nn::{train_with_early_stopping, Network};
use crate::secagg::TranscriptEvent;
use crate::{seed, Error, Result};

/// Which table a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    /// One row per (pooled) federation size.
    Size,
    /// Scenario D: one row per fixed clip norm.
    ClipSweep,
    /// Scenario D: one row per noise multiplier.
    NoiseSweep,
}

/// One line of a result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub kind: RowKind,
    /// Federation size, or the number of pooled clients for scenario 0.
    pub federation_size: usize,
    pub clients: Vec<String>,
    pub correlation_rate: Option<f64>,
    pub clip_norm: Option<f64>,
    pub noise_scale: Option<f64>,
    pub effective_noise: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    /// Validation metrics of the final model (after local fine-tuning when
    /// configured).
    pub validation: MetricsReport,
    /// Training-split metrics of the final global model.
    pub train: MetricsReport,
    /// Mean wall time per round (per epoch for scenario 0).
    pub seconds_per_step: f64,
    /// Validation MAPE after every round (epoch).
    pub mape_curve: Vec<f64>,
    pub rounds: Vec<RoundReport>,
    pub clip_trajectory: Option<Vec<(usize, f64)>>,
    /// Secure-aggregation messages of the last round.
    pub transcript: Vec<TranscriptEvent>,
}

impl ResultRow {
    /// Short identifier used in logs and plot files.
    pub fn series_name(&self) -> String {
        match self.kind {
            RowKind::Size => format!("size={}", self.federation_size),
            RowKind::ClipSweep => format!("S={}", self.clip_norm.unwrap_or(f64::NAN)),
            RowKind::NoiseSweep => format!("z={}", self.noise_scale.unwrap_or(f64::NAN)),
        }
    }
}

/// Everything a scenario run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: ScenarioId,
    /// Resolved configuration that was run.
    pub config: ScenarioConfig,
    pub fingerprint: String,
    pub clipping: Option<ClippingMode>,
    pub rows: Vec<ResultRow>,
}

impl ScenarioResult {
    /// Copy with every wall-time field zeroed, for determinism checks.
    pub fn without_timing(&self) -> ScenarioResult {
        let mut out = self.clone();
        for row in &mut out.rows {
            row.seconds_per_step = 0.0;
            for r in &mut row.rounds {
                r.wall_time_seconds = 0.0;
            }
        }
        out
    }

    pub fn rows_of(&self, kind: RowKind) -> impl Iterator<Item = &ResultRow> {
        self.rows.iter().filter(move |r| r.kind == kind)
    }
}

/// Load or generate the client series and prepare them.
pub fn load_clients(cfg: &ScenarioConfig) -> Result<Vec<ClientDataset>> {
    let series = match &cfg.data {
        DataSource::Synthetic { groups } => {
            let mut all = Vec::new();
            for g in groups {
                all.extend(generate_synthetic(g)?);
            }
            all
        }
        DataSource::Csv { path, cadence } => ingest_csv(path, *cadence)?,
    };
    prepare_all(&series, &cfg.prep)
}

/// Run the experiment described by `config`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    run_scenario_with(config, &mut |_| {})
}

/// [`run_scenario`] with a progress callback receiving one line per
/// completed row.
pub fn run_scenario_with(
    config: &ScenarioConfig,
    progress: &mut dyn FnMut(&str),
) -> Result<ScenarioResult> {
    config.validate()?;
    let cfg = config.resolved();
    let clients = load_clients(&cfg)?;
    if cfg.scenario != ScenarioId::D {
        if let Some(&n) = cfg.federation_sizes.iter().find(|&&n| n > clients.len()) {
            return Err(Error::Config(format!(
                "federation size {n} exceeds the {} available clients",
                clients.len()
            )));
        }
    }
    let mut rows = Vec::new();
    let mut push = |row: ResultRow, rows: &mut Vec<ResultRow>| {
        progress(&format!(
            "scenario {} {}: mape {:.4}, mse {:.6}",
            cfg.scenario,
            row.series_name(),
            row.validation.mape,
            row.validation.mse
        ));
        rows.push(row);
    };
    match cfg.scenario {
        ScenarioId::Central => {
            for &n in &cfg.federation_sizes {
                push(run_central(&cfg, &clients[..n])?, &mut rows);
            }
        }
        ScenarioId::A | ScenarioId::C | ScenarioId::E => {
            for &n in &cfg.federation_sizes {
                let subset = &clients[..n];
                let out = run_federated(
                    subset,
                    &cfg.model_spec(),
                    &cfg.train,
                    &cfg.federation,
                    None,
                    cfg.secagg.as_ref(),
                    None,
                )?;
                push(fed_row(&cfg, RowKind::Size, subset, out, None)?, &mut rows);
            }
        }
        ScenarioId::B => {
            let clustering = cfg.clustering.clone().unwrap_or_default();
            let ids: Vec<String> = clients.iter().map(|c| c.client_id.clone()).collect();
            let series: Vec<&[f64]> = clients.iter().map(|c| c.train_series.as_slice()).collect();
            let labels: Vec<String> = clients.iter().map(|c| c.acorn_group.clone()).collect();
            let matrix = correlation_matrix(&ids, &series)?;
            for &n in &cfg.federation_sizes {
                let sel = select_federation(
                    &matrix,
                    &labels,
                    clustering.groups.as_deref(),
                    n,
                    clustering.strategy,
                )?;
                let subset: Vec<ClientDataset> =
                    sel.indices.iter().map(|&i| clients[i].clone()).collect();
                let out = run_federated(
                    &subset,
                    &cfg.model_spec(),
                    &cfg.train,
                    &cfg.federation,
                    None,
                    None,
                    None,
                )?;
                let mut row = fed_row(&cfg, RowKind::Size, &subset, out, None)?;
                row.correlation_rate = Some(sel.correlation_rate);
                push(row, &mut rows);
            }
        }
        ScenarioId::D => {
            let sweep = cfg.dp.clone().expect("validated");
            let q = cfg.federation.participation_ratio;
            let w = clients.len();
            if sweep.clipping == ClippingMode::Fixed {
                for &s in &sweep.clip_values {
                    let dp = sweep.fixed(s, sweep.clip_sweep_noise);
                    let out = run_dp(&cfg, &clients, &dp)?;
                    push(fed_row(&cfg, RowKind::ClipSweep, &clients, out, Some(&dp))?, &mut rows);
                }
            }
            for &z in &sweep.noise_scales {
                let dp = match sweep.clipping {
                    ClippingMode::Fixed => sweep.fixed(sweep.clip_norm, z),
                    ClippingMode::Adaptive => sweep.adaptive(z, sweep.sigma_b_for(q, w)),
                };
                let out = run_dp(&cfg, &clients, &dp)?;
                push(fed_row(&cfg, RowKind::NoiseSweep, &clients, out, Some(&dp))?, &mut rows);
            }
        }
    }
    Ok(ScenarioResult {
        scenario: cfg.scenario,
        fingerprint: cfg.fingerprint()?,
        clipping: cfg.dp.as_ref().map(|d| d.clipping),
        config: cfg,
        rows,
    })
}

fn run_dp(cfg: &ScenarioConfig, clients: &[ClientDataset], dp: &DpConfig) -> Result<FedOutcome> {
    run_federated(
        clients,
        &cfg.model_spec(),
        &cfg.train,
        &cfg.federation,
        Some(dp),
        None,
        None,
    )
}

fn fed_row(
    cfg: &ScenarioConfig,
    kind: RowKind,
    clients: &[ClientDataset],
    out: FedOutcome,
    dp: Option<&DpConfig>,
) -> Result<ResultRow> {
    let net = Network::new(&cfg.model_spec())?;
    let train_sets: Vec<_> = clients.iter().map(|c| &c.train).collect();
    let train = net.evaluate(&out.params, &train_sets, cfg.federation.metric_space)?;
    let last = out.final_report();
    let validation = out.personalized.unwrap_or(last.validation);
    let (clip_norm, noise_scale, effective, delta) = match dp {
        None => (None, None, None, None),
        Some(dp) => {
            let (clip, eff) = match dp.clip {
                ClipConfig::Fixed { s } => (Some(s), dp.noise_scale),
                ClipConfig::Adaptive { sigma_b, .. } if dp.noise_scale > 0.0 => {
                    (None, effective_noise(dp.noise_scale, sigma_b)?)
                }
                ClipConfig::Adaptive { .. } => (None, 0.0),
            };
            (clip, Some(dp.noise_scale), Some(eff), Some(dp.delta))
        }
    };
    Ok(ResultRow {
        kind,
        federation_size: clients.len(),
        clients: clients.iter().map(|c| c.client_id.clone()).collect(),
        correlation_rate: None,
        clip_norm,
        noise_scale,
        effective_noise: effective,
        epsilon: dp.map(|_| out.epsilon.map_or(f64::INFINITY, |(e, _)| e)),
        delta,
        validation,
        train,
        seconds_per_step: out.mean_round_time(),
        mape_curve: out.rounds.iter().map(|r| r.validation.mape).collect(),
        clip_trajectory: out.clip_state.as_ref().map(|s| s.trajectory()),
        transcript: out.last_transcript,
        rounds: out.rounds,
    })
}

fn run_central(cfg: &ScenarioConfig, clients: &[ClientDataset]) -> Result<ResultRow> {
    let net = Network::new(&cfg.model_spec())?;
    let init = net.init(seed::derive(cfg.federation.seed, "init", 0));
    let pooled = pool_windows(clients.iter().map(|c| &c.train))
        .ok_or_else(|| Error::Config("no clients to pool".into()))?;
    let validation: Vec<_> = clients.iter().map(|c| &c.validation).collect();
    let space = cfg.federation.metric_space;
    let start = Instant::now();
    let out = train_with_early_stopping(&net, &init, &pooled, &validation, &cfg.train, space)?;
    let elapsed = start.elapsed().as_secs_f64();
    let train_sets: Vec<_> = clients.iter().map(|c| &c.train).collect();
    Ok(ResultRow {
        kind: RowKind::Size,
        federation_size: clients.len(),
        clients: clients.iter().map(|c| c.client_id.clone()).collect(),
        correlation_rate: None,
        clip_norm: None,
        noise_scale: None,
        effective_noise: None,
        epsilon: None,
        delta: None,
        validation: net.evaluate(&out.params, &validation, space)?,
        train: net.evaluate(&out.params, &train_sets, space)?,
        seconds_per_step: elapsed / out.validation.len().max(1) as f64,
        mape_curve: out.validation.iter().map(|m| m.mape).collect(),
        rounds: Vec::new(),
        clip_trajectory: None,
        transcript: Vec::new(),
    })
}
