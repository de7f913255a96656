use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rand::Rng;

use super::{
    average_updates, sample_clients, Algorithm, ClientSeeding, FederationConfig, RoundReport,
};
use crate::accountant::{compose_and_convert, MechanismEvent, PrivacyLedger};
use crate::dp::{
    adaptive_clip_update, add_server_noise, flat_clip, noise_sigma, sensitivity, ClipConfig,
    ClipState, DpConfig,
};
use crate::loaddata::ClientDataset;
use crate::metrics::MetricsReport;
use crate::nn::{
    adam_step, early_stopper, AdamState, ModelSpec, Network, ParamVector,
    TrainConfig, Trainer,
};
use crate::secagg::{secure_mean, SecAggConfig, TranscriptEvent};
use crate::{seed, Error, Result};

/// Callback invoked after every round, e.g. to stream JSON lines.
pub type RoundObserver<'a> = &'a mut dyn FnMut(&RoundReport) -> Result<()>;

/// Result of a federated run.
#[derive(Debug, Clone)]
pub struct FedOutcome {
    /// Global model after the last completed round.
    pub params: ParamVector,
    pub rounds: Vec<RoundReport>,
    /// Adaptive clip trajectory, if adaptive clipping was used.
    pub clip_state: Option<ClipState>,
    /// Accumulated privacy events, if noise was added.
    pub ledger: Option<PrivacyLedger>,
    /// Final `(ε, best α)`.
    pub epsilon: Option<(f64, f64)>,
    /// Noise multiplier applied to the averaged update.
    pub noise_multiplier: Option<f64>,
    /// Pooled validation metrics of the locally fine-tuned models.
    pub personalized: Option<MetricsReport>,
    /// Secure-aggregation messages of the last round.
    pub last_transcript: Vec<TranscriptEvent>,
    pub stopped_early: bool,
}

impl FedOutcome {
    pub fn final_report(&self) -> &RoundReport {
        self.rounds.last().expect("at least one round")
    }

    pub fn mean_round_time(&self) -> f64 {
        self.rounds.iter().map(|r| r.wall_time_seconds).sum::<f64>() / self.rounds.len() as f64
    }
}

/// Fed-Avg: sampled clients train `E` local epochs from the broadcast model
/// and the server averages the results.
pub fn run_fedavg(
    clients: &[ClientDataset],
    spec: &ModelSpec,
    train: &TrainConfig,
    fed: &FederationConfig,
    dp: Option<&DpConfig>,
    secagg: Option<&SecAggConfig>,
) -> Result<FedOutcome> {
    let fed = FederationConfig {
        algorithm: Algorithm::FedAvg,
        ..fed.clone()
    };
    run_federated(clients, spec, train, &fed, dp, secagg, None)
}

/// Fed-SGD: sampled clients each compute one mini-batch gradient and the
/// server applies one Adam step with the averaged gradient.
pub fn run_fedsgd(
    clients: &[ClientDataset],
    spec: &ModelSpec,
    train: &TrainConfig,
    fed: &FederationConfig,
    dp: Option<&DpConfig>,
    secagg: Option<&SecAggConfig>,
) -> Result<FedOutcome> {
    let fed = FederationConfig {
        algorithm: Algorithm::FedSgd,
        ..fed.clone()
    };
    run_federated(clients, spec, train, &fed, dp, secagg, None)
}

struct Engine<'a> {
    clients: &'a [ClientDataset],
    net: Network,
    train: &'a TrainConfig,
    fed: &'a FederationConfig,
    dp: Option<&'a DpConfig>,
    secagg: Option<&'a SecAggConfig>,
    trainers: Vec<Option<Trainer>>,
    clip_state: Option<ClipState>,
    ledger: Option<PrivacyLedger>,
    noise_multiplier: f64,
    server_adam: AdamState,
    last_transcript: Vec<TranscriptEvent>,
}

/// Client `k`'s training configuration.
fn client_config(train: &TrainConfig, seeding: ClientSeeding, k: usize) -> TrainConfig {
    let seed = match seeding {
        ClientSeeding::Distinct => seed::derive(train.seed, "client", k as u64),
        ClientSeeding::Shared => train.seed,
    };
    TrainConfig {
        seed,
        ..train.clone()
    }
}

/// Outcome of the clients' local work in one round.
struct LocalResults {
    /// `(client index, local weights or gradient)` in index order.
    updates: Vec<(usize, ParamVector)>,
    failed: Vec<usize>,
    loss: f64,
}

impl<'a> Engine<'a> {
    fn trainer(&mut self, k: usize) -> Result<&mut Trainer> {
        if self.trainers[k].is_none() {
            let cfg = client_config(self.train, self.fed.client_seeding, k);
            let n = self.clients[k].train.len();
            self.trainers[k] = Some(Trainer::new(cfg, n, self.net.param_count())?);
        }
        Ok(self.trainers[k].as_mut().expect("just created"))
    }

    fn local_work(&mut self, global: &ParamVector, sampled: &[usize]) -> Result<LocalResults> {
        let mut updates = Vec::with_capacity(sampled.len());
        let mut failed = Vec::new();
        let (mut loss_sum, mut loss_n) = (0.0, 0usize);
        for &k in sampled {
            let clients = self.clients;
            let epochs = self.fed.local_epochs;
            let algorithm = self.fed.algorithm;
            let net = self.net.clone();
            let trainer = self.trainer(k)?;
            let result = match algorithm {
                Algorithm::FedAvg => {
                    let mut local = global.clone();
                    trainer
                        .train_epochs(&net, &mut local, &clients[k].train, epochs)
                        .map(|losses| (local, losses.iter().sum::<f64>() / losses.len() as f64))
                }
                Algorithm::FedSgd => trainer
                    .next_gradient(&net, global, &clients[k].train)
                    .map(|(loss, grad, _)| (grad, loss)),
            };
            match result {
                Ok((update, loss)) if update.is_finite() => {
                    loss_sum += loss;
                    loss_n += 1;
                    updates.push((k, update));
                }
                Ok(_) | Err(Error::Divergence(_)) => {
                    self.trainers[k] = None;
                    failed.push(k);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(LocalResults {
            updates,
            failed,
            loss: if loss_n > 0 { loss_sum / loss_n as f64 } else { f64::NAN },
        })
    }

    fn current_clip(&self) -> Option<f64> {
        self.dp.map(|dp| match dp.clip {
            ClipConfig::Fixed { s } => s,
            ClipConfig::Adaptive { .. } => self.clip_state.as_ref().expect("adaptive").current,
        })
    }

    /// Aggregate the round's updates into the next global model (Fed-Avg)
    /// or the averaged gradient (Fed-SGD). Returns the new vector and the
    /// ids lost to secure-aggregation dropouts.
    fn aggregate(
        &mut self,
        round: usize,
        global: &ParamVector,
        updates: &[(usize, ParamVector)],
    ) -> Result<(ParamVector, Vec<usize>)> {
        let fedavg = self.fed.algorithm == Algorithm::FedAvg;
        let clip = self.current_clip();

        // Client-side deltas (Fed-Avg) or gradients (Fed-SGD), clipped.
        let mut within_bound = Vec::with_capacity(updates.len());
        let mut clipped: Vec<(usize, ParamVector, bool)> = Vec::with_capacity(updates.len());
        for (k, u) in updates {
            let delta = if fedavg { u.sub(global)? } else { u.clone() };
            let (d, was_clipped) = match clip {
                Some(s) => flat_clip(&delta, s)?,
                None => (delta, false),
            };
            within_bound.push(!was_clipped);
            clipped.push((*k, d, was_clipped));
        }

        let mut dropped = Vec::new();
        let mut aggregate = if let Some(sa) = self.secagg {
            let inputs: BTreeMap<u64, Vec<f64>> = clipped
                .iter()
                .map(|(k, d, _)| (*k as u64, d.values.clone()))
                .collect();
            let mut rng = seed::child_rng(self.fed.seed, "dropout", round as u64);
            let dropouts: BTreeSet<u64> = inputs
                .keys()
                .copied()
                .filter(|_| sa.dropout_rate > 0.0 && rng.random::<f64>() < sa.dropout_rate)
                .collect();
            let range = sa.range_for(clip);
            let session_seed = seed::derive(self.fed.seed, "secagg", round as u64);
            let out = secure_mean(&inputs, &dropouts, sa, range, session_seed)?;
            dropped = out.dropouts.iter().map(|&id| id as usize).collect();
            self.last_transcript = out.transcript;
            let mean = ParamVector::new(out.mean, global.layout().clone())?;
            if fedavg {
                global.add(&mean)?
            } else {
                mean
            }
        } else if fedavg {
            // Average in weight space; unclipped clients contribute their
            // local weights exactly.
            let contributions: Vec<ParamVector> = clipped
                .iter()
                .zip(updates)
                .map(|((_, d, was_clipped), (_, local))| {
                    if *was_clipped {
                        global.add(d)
                    } else {
                        Ok(local.clone())
                    }
                })
                .collect::<Result<_>>()?;
            average_updates(&contributions.iter().collect::<Vec<_>>())?
        } else {
            average_updates(&clipped.iter().map(|(_, d, _)| d).collect::<Vec<_>>())?
        };

        if let (Some(dp), Some(s)) = (self.dp, clip) {
            let w = self.clients.len();
            let sigma = noise_sigma(
                self.noise_multiplier,
                sensitivity(s, self.fed.participation_ratio, w),
            );
            if sigma > 0.0 && sigma.is_finite() {
                let noise_seed = seed::derive(self.fed.seed, "server-noise", round as u64);
                aggregate = add_server_noise(&aggregate, sigma, noise_seed)?;
            } else if sigma.is_infinite() {
                return Err(Error::Config("noise with an infinite clip norm".into()));
            }
            if self.noise_multiplier > 0.0 {
                // With adaptive clipping the update at z_Δ and the count at
                // σ_b together cost the same as one Gaussian at the nominal z.
                self.ledger
                    .as_mut()
                    .expect("ledger with dp")
                    .push(MechanismEvent {
                        round,
                        q: self.fed.participation_ratio,
                        noise_multiplier: dp.noise_scale,
                    })?;
            }
            if let ClipConfig::Adaptive {
                eta_c,
                target_quantile,
                sigma_b,
                ..
            } = dp.clip
            {
                let state = self.clip_state.as_ref().expect("adaptive");
                let clip_seed = seed::derive(self.fed.seed, "clip-noise", round as u64);
                self.clip_state = Some(adaptive_clip_update(
                    state,
                    &within_bound,
                    sigma_b,
                    eta_c,
                    target_quantile,
                    clip_seed,
                )?);
            }
        }
        Ok((aggregate, dropped))
    }
}

/// Run `fed.rounds` communication rounds over `clients`.
///
/// The global model starts from `init(spec, derive(fed.seed, "init", 0))`.
/// Each client keeps its own trainer (Adam moments and batch order) across
/// the rounds it takes part in. After aggregation, the global model is
/// evaluated on the pooled validation windows of all clients.
pub fn run_federated(
    clients: &[ClientDataset],
    spec: &ModelSpec,
    train: &TrainConfig,
    fed: &FederationConfig,
    dp: Option<&DpConfig>,
    secagg: Option<&SecAggConfig>,
    mut observer: Option<RoundObserver<'_>>,
) -> Result<FedOutcome> {
    fed.validate(clients.len())?;
    train.validate()?;
    if let Some(dp) = dp {
        dp.validate()?;
    }
    if let Some(sa) = secagg {
        sa.validate()?;
    }
    let net = Network::new(spec)?;
    let mut global = net.init(seed::derive(fed.seed, "init", 0));
    let noise_multiplier = dp.map(DpConfig::update_noise_multiplier).transpose()?;
    let mut engine = Engine {
        clients,
        train,
        fed,
        dp,
        secagg,
        trainers: vec![None; clients.len()],
        clip_state: dp.and_then(|d| match d.clip {
            ClipConfig::Adaptive { c0, .. } => Some(ClipState::new(c0)),
            ClipConfig::Fixed { .. } => None,
        }),
        ledger: dp.map(|_| PrivacyLedger::new()),
        noise_multiplier: noise_multiplier.unwrap_or(0.0),
        server_adam: AdamState::new(net.param_count()),
        last_transcript: Vec::new(),
        net,
    };
    let validation: Vec<_> = clients.iter().map(|c| &c.validation).collect();
    let mut rounds = Vec::with_capacity(fed.rounds);
    let mut history = Vec::new();
    let mut stopped_early = false;

    for round in 0..fed.rounds {
        let start = Instant::now();
        let sampled = sample_clients(round, fed.participation_ratio, clients.len(), fed.seed);
        let local = engine.local_work(&global, &sampled)?;
        if local.updates.is_empty() {
            return Err(Error::AllClientsFailed(round));
        }
        let (aggregate, dropped) = engine.aggregate(round, &global, &local.updates)?;
        match fed.algorithm {
            Algorithm::FedAvg => global = aggregate,
            Algorithm::FedSgd => adam_step(&mut global, &aggregate, &mut engine.server_adam, train)?,
        }
        if !global.is_finite() {
            return Err(Error::Divergence(format!("global model in round {round}")));
        }
        let wall_time_seconds = start.elapsed().as_secs_f64();
        let report = engine.net.evaluate(&global, &validation, fed.metric_space)?;
        let epsilon = match (&engine.ledger, dp) {
            (Some(l), Some(d)) if !l.events().is_empty() => Some(compose_and_convert(l, d.delta)?.0),
            (Some(_), Some(_)) => Some(f64::INFINITY),
            _ => None,
        };
        let ids = |ks: &[usize]| ks.iter().map(|&k| clients[k].client_id.clone()).collect();
        let report = RoundReport {
            round,
            validation: report,
            train_loss: local.loss,
            wall_time_seconds,
            participants: ids(&sampled),
            failed: ids(&local.failed),
            dropped: ids(&dropped),
            clip_norm: engine.current_clip(),
            epsilon,
        };
        if let Some(obs) = observer.as_mut() {
            obs(&report)?;
        }
        history.push(report.validation.mse);
        rounds.push(report);
        if let Some(patience) = fed.early_stop_patience {
            if early_stopper(&history, patience) {
                stopped_early = true;
                break;
            }
        }
    }

    let personalized = if fed.post_training_local_epochs > 0 {
        let mut tuned = Vec::with_capacity(clients.len());
        // Each client resumes its own optimizer state from the rounds.
        for (k, c) in clients.iter().enumerate() {
            let net = engine.net.clone();
            let mut p = global.clone();
            engine
                .trainer(k)?
                .train_epochs(&net, &mut p, &c.train, fed.post_training_local_epochs)?;
            tuned.push(p);
        }
        let pairs: Vec<_> = tuned.iter().zip(&validation).map(|(p, v)| (p, *v)).collect();
        Some(engine.net.evaluate_each(&pairs, fed.metric_space)?)
    } else {
        None
    };

    let epsilon = match (&engine.ledger, dp) {
        (Some(l), Some(d)) if !l.events().is_empty() => Some(compose_and_convert(l, d.delta)?),
        _ => None,
    };
    Ok(FedOutcome {
        params: global,
        rounds,
        clip_state: engine.clip_state,
        ledger: engine.ledger,
        epsilon,
        noise_multiplier,
        personalized,
        last_transcript: engine.last_transcript,
        stopped_early,
    })
}
