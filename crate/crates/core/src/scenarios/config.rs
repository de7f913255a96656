use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::SearchStrategy;
use crate::dp::{ClipConfig, DpConfig};
use crate::federation::{clients_per_round, FederationConfig};
use crate::loaddata::{PrepConfig, Resolution, SyntheticSpec};
use crate::nn::{Architecture, ModelSpec, TrainConfig};
use crate::secagg::SecAggConfig;
use crate::{seed, Error, Result};

/// Environment variable that, when set, prefixes relative output
/// directories.
pub const OUTPUT_ROOT_ENV: &str = "FEDLOAD_OUTPUT_ROOT";

/// The six experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawId", into = "String")]
pub enum ScenarioId {
    /// Centralized training on pooled client data.
    Central,
    /// Plain Fed-Avg per federation size.
    A,
    /// Fed-Avg on correlation-selected federations.
    B,
    /// Fed-Avg with the convolutional sequence-to-sequence model.
    C,
    /// DP Fed-Avg with clip and noise sweeps.
    D,
    /// Fed-Avg with secure aggregation.
    E,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Text(String),
    Number(i64),
}

impl TryFrom<RawId> for ScenarioId {
    type Error = Error;

    fn try_from(raw: RawId) -> Result<Self> {
        match raw {
            RawId::Text(s) => s.parse(),
            RawId::Number(n) => n.to_string().parse(),
        }
    }
}

impl From<ScenarioId> for String {
    fn from(id: ScenarioId) -> String {
        id.to_string()
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(ScenarioId::Central),
            "A" | "a" => Ok(ScenarioId::A),
            "B" | "b" => Ok(ScenarioId::B),
            "C" | "c" => Ok(ScenarioId::C),
            "D" | "d" => Ok(ScenarioId::D),
            "E" | "e" => Ok(ScenarioId::E),
            other => Err(Error::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScenarioId::Central => "0",
            ScenarioId::A => "A",
            ScenarioId::B => "B",
            ScenarioId::C => "C",
            ScenarioId::D => "D",
            ScenarioId::E => "E",
        };
        f.write_str(s)
    }
}

/// Where client series come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    /// Concatenation of one or more synthetic populations.
    Synthetic { groups: Vec<SyntheticSpec> },
    /// Smart-meter CSV file.
    Csv { path: PathBuf, cadence: Resolution },
}

/// Inputs of correlation-based federation selection.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusteringConfig {
    /// Restrict the pool to these group labels; all clients when absent.
    pub groups: Option<Vec<String>>,
    pub strategy: SearchStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClippingMode {
    #[default]
    Fixed,
    Adaptive,
}

/// Differential-privacy sweep of scenario D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DpSweep {
    pub delta: f64,
    pub clipping: ClippingMode,
    /// Noise multipliers `z`, one row each.
    pub noise_scales: Vec<f64>,
    /// Fixed clip norms `S` tried before the noise sweep (fixed clipping).
    pub clip_values: Vec<f64>,
    /// Noise multiplier used during the clip-norm sweep.
    pub clip_sweep_noise: f64,
    /// Fixed clip norm used for the noise sweep.
    pub clip_norm: f64,
    pub c0: f64,
    pub eta_c: f64,
    pub target_quantile: f64,
    /// Noise on the clipped-count estimate; `0.05 · clients per round`
    /// when absent.
    pub sigma_b: Option<f64>,
}

impl Default for DpSweep {
    fn default() -> Self {
        DpSweep {
            delta: 4e-3,
            clipping: ClippingMode::Fixed,
            noise_scales: tenths(1, 9),
            clip_values: tenths(1, 7),
            clip_sweep_noise: 0.0,
            clip_norm: 0.3,
            c0: 0.1,
            eta_c: 0.2,
            target_quantile: 0.5,
            sigma_b: None,
        }
    }
}

fn tenths(from: u32, to: u32) -> Vec<f64> {
    (from..=to).map(|i| f64::from(i) / 10.0).collect()
}

impl DpSweep {
    /// Count noise for `w` clients sampled at ratio `q`.
    pub fn sigma_b_for(&self, q: f64, w: usize) -> f64 {
        self.sigma_b
            .unwrap_or_else(|| 0.05 * clients_per_round(q, w) as f64)
    }

    /// Fixed clipping at `s` with noise `z`.
    pub fn fixed(&self, s: f64, z: f64) -> DpConfig {
        DpConfig {
            noise_scale: z,
            delta: self.delta,
            clip: ClipConfig::Fixed { s },
        }
    }

    /// Adaptive clipping with noise `z`.
    pub fn adaptive(&self, z: f64, sigma_b: f64) -> DpConfig {
        DpConfig {
            noise_scale: z,
            delta: self.delta,
            clip: ClipConfig::Adaptive {
                c0: self.c0,
                eta_c: self.eta_c,
                target_quantile: self.target_quantile,
                sigma_b,
            },
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: ScenarioId,
    /// Master seed; when present it replaces the data, training and
    /// federation seeds by children derived from it.
    #[serde(default)]
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    /// Multiplies rounds, epochs and (scenario D) the synthetic population.
    pub scale: f64,
    /// Federation sizes (pooled client counts for scenario 0).
    pub federation_sizes: Vec<usize>,
    pub data: DataSource,
    pub prep: PrepConfig,
    pub model: Architecture,
    pub train: TrainConfig,
    pub federation: FederationConfig,
    #[serde(default)]
    pub dp: Option<DpSweep>,
    #[serde(default)]
    pub secagg: Option<SecAggConfig>,
    #[serde(default)]
    pub clustering: Option<ClusteringConfig>,
}

impl ScenarioConfig {
    /// Hyperparameters of the published experiments for `id`.
    pub fn preset(id: ScenarioId) -> Self {
        let population = |n_clients, acorn: &str, prefix: &str| SyntheticSpec {
            n_clients,
            acorn_group: acorn.into(),
            id_prefix: prefix.into(),
            ..SyntheticSpec::default()
        };
        let mut cfg = ScenarioConfig {
            scenario: id,
            seed: None,
            output_dir: PathBuf::from(format!("results/scenario-{id}")),
            scale: 1.0,
            federation_sizes: vec![2, 5, 8, 11, 14, 17, 20, 23],
            data: DataSource::Synthetic {
                groups: vec![population(23, "ACORN-SYN", "SYN")],
            },
            prep: PrepConfig::default(),
            model: Architecture::encoder_decoder(),
            train: TrainConfig::default(),
            federation: FederationConfig {
                participation_ratio: 1.0,
                rounds: 300,
                local_epochs: 5,
                ..FederationConfig::default()
            },
            dp: None,
            secagg: None,
            clustering: None,
        };
        match id {
            ScenarioId::Central | ScenarioId::A => {}
            ScenarioId::B => {
                let mut low = population(20, "ACORN-L", "L");
                low.seed = 1;
                cfg.data = DataSource::Synthetic {
                    groups: vec![population(20, "ACORN-H", "H"), low],
                };
                cfg.clustering = Some(ClusteringConfig::default());
            }
            ScenarioId::C => cfg.model = Architecture::conv_seq2seq(),
            ScenarioId::D => {
                cfg.model = Architecture::stacked_lstm();
                cfg.data = DataSource::Synthetic {
                    groups: vec![population(100, "ACORN-SYN", "SYN")],
                };
                cfg.federation_sizes = Vec::new();
                cfg.train.batch_size = 64;
                cfg.federation.participation_ratio = 0.1;
                cfg.federation.rounds = 100;
                cfg.federation.local_epochs = 1;
                cfg.federation.post_training_local_epochs = 1;
                cfg.dp = Some(DpSweep::default());
            }
            ScenarioId::E => cfg.secagg = Some(SecAggConfig::default()),
        }
        cfg
    }

    /// Parse a TOML document layered over the preset named by its
    /// `scenario` key, then apply `key.path=value` overrides.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text.parse()?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let id: ScenarioId = match doc.get("scenario") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(toml::Value::Integer(n)) => n.to_string().parse()?,
            Some(other) => return Err(Error::Config(format!("invalid scenario {other}"))),
            None => return Err(Error::Config("missing 'scenario' key".into())),
        };
        let mut merged = toml::Table::try_from(Self::preset(id))
            .map_err(|e| Error::Toml(e.to_string()))?;
        merge(&mut merged, doc.clone());
        let cfg: ScenarioConfig = merged.try_into()?;
        let known = toml::Table::try_from(&cfg).map_err(|e| Error::Toml(e.to_string()))?;
        if let Some(key) = unknown_key(&doc, &known, "") {
            return Err(Error::Config(format!("unknown config key '{key}'")));
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, overrides)
    }

    /// The preset for `id` with overrides only.
    pub fn from_overrides(id: ScenarioId, overrides: &[String]) -> Result<Self> {
        Self::from_toml_str(&format!("scenario = \"{id}\""), overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Toml(e.to_string()))
    }

    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec::new(self.model.clone(), self.prep.lookback, self.prep.horizon)
    }

    /// Check that the options fit the scenario, before any work is done.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("scenario {}: {m}", self.scenario)));
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad("scale must be a positive number");
        }
        match self.scenario {
            ScenarioId::D if self.dp.is_none() => return bad("requires a [dp] section"),
            ScenarioId::E if self.secagg.is_none() => return bad("requires a [secagg] section"),
            ScenarioId::B if self.clustering.is_none() => {
                return bad("requires a [clustering] section")
            }
            _ => {}
        }
        if self.dp.is_some() && self.scenario != ScenarioId::D {
            return bad("differential privacy belongs to scenario D");
        }
        if self.secagg.is_some() && self.scenario != ScenarioId::E {
            return bad("secure aggregation belongs to scenario E");
        }
        if self.scenario != ScenarioId::D
            && (self.federation_sizes.is_empty() || self.federation_sizes.contains(&0))
        {
            return bad("federation sizes must be non-empty and positive");
        }
        if let Some(dp) = &self.dp {
            if dp.noise_scales.is_empty() {
                return bad("noise sweep is empty");
            }
            let probe = match dp.clipping {
                ClippingMode::Fixed => dp.fixed(dp.clip_norm, dp.noise_scales[0]),
                ClippingMode::Adaptive => dp.adaptive(dp.noise_scales[0], dp.sigma_b.unwrap_or(0.0)),
            };
            probe.validate()?;
            for &s in &dp.clip_values {
                dp.fixed(s, dp.clip_sweep_noise).validate()?;
            }
            for &z in &dp.noise_scales {
                if !(z >= 0.0 && z.is_finite()) {
                    return bad("noise scales must be finite and ≥ 0");
                }
            }
        }
        if let Some(sa) = &self.secagg {
            sa.validate()?;
        }
        if let DataSource::Synthetic { groups } = &self.data {
            if groups.is_empty() {
                return bad("synthetic data needs at least one group");
            }
            for g in groups {
                g.validate()?;
            }
        }
        self.train.validate()?;
        self.federation.validate(self.federation_sizes.iter().copied().max().unwrap_or(1))?;
        crate::nn::Network::new(&self.model_spec())?;
        Ok(())
    }

    /// Apply `scale` and the master seed, returning the configuration that
    /// is actually run.
    pub fn resolved(&self) -> ScenarioConfig {
        let mut cfg = self.clone();
        let scaled = |n: usize| ((n as f64 * self.scale).round() as usize).max(1);
        cfg.federation.rounds = scaled(cfg.federation.rounds);
        cfg.train.max_epochs = scaled(cfg.train.max_epochs);
        if let (ScenarioId::D, DataSource::Synthetic { groups }) = (cfg.scenario, &mut cfg.data) {
            for g in groups {
                g.n_clients = scaled(g.n_clients);
            }
        }
        cfg.scale = 1.0;
        if let Some(master) = cfg.seed {
            if let DataSource::Synthetic { groups } = &mut cfg.data {
                for (i, g) in groups.iter_mut().enumerate() {
                    g.seed = seed::derive(master, "data", i as u64);
                }
            }
            cfg.train.seed = seed::derive(master, "train", 0);
            cfg.federation.seed = seed::derive(master, "federation", 0);
        }
        cfg
    }

    /// Output directory, prefixed by `$FEDLOAD_OUTPUT_ROOT` when relative.
    pub fn output_path(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if self.output_dir.is_relative() => Path::new(&root).join(&self.output_dir),
            _ => self.output_dir.clone(),
        }
    }

    /// SHA-256 over the canonical JSON form of the configuration.
    pub fn fingerprint(&self) -> Result<String> {
        let json = serde_json::to_vec(self)?;
        let digest = Sha256::digest(&json);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Set `doc[key.path] = value`, creating tables on the way. The value is
/// parsed as a TOML literal and kept as a string if that fails.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' lacks '='")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override key '{path}'")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = keys.split_last().expect("non-empty key");
    let mut table = doc;
    for key in parents {
        let entry = table
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override path '{path}' crosses a value")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

/// First key path of `doc` that is absent from `known`.
fn unknown_key(doc: &toml::Table, known: &toml::Table, prefix: &str) -> Option<String> {
    for (key, value) in doc {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match (known.get(key), value) {
            (None, _) => return Some(path),
            (Some(toml::Value::Table(k)), toml::Value::Table(d)) => {
                if let Some(p) = unknown_key(d, k, &path) {
                    return Some(p);
                }
            }
            _ => {}
        }
    }
    None
}

/// Deep-merge `top` into `base`. Tables whose `type` or `source` tag
/// changes are replaced rather than merged.
fn merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) if same_tag(b, &t) => merge(b, t),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

fn same_tag(a: &toml::Table, b: &toml::Table) -> bool {
    ["type", "source"]
        .iter()
        .all(|tag| b.get(*tag).is_none() || a.get(*tag) == b.get(*tag))
}
