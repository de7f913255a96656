use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedload::accountant::{write_breakdown_csv, PrivacyLedger};
use fedload::clustering::{correlation_matrix, select_federation, SearchStrategy};
use fedload::loaddata::{
    clean, generate_synthetic, ingest_csv, prepare_client, resample_hourly, write_csv, PrepConfig,
    Resolution, SyntheticSpec, TimeSeries,
};
use fedload::scenarios::{emit_report, run_scenario_with, ScenarioConfig, ScenarioId};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] fedload::Error),
    #[error("{0}: {1}")]
    File(PathBuf, io::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

/// `println!` that returns the write error instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => { writeln!(io::stdout().lock(), $($arg)*)? };
}

#[derive(Parser)]
#[command(name = "fedload", version, about = "Federated load forecasting simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic household load in the meter CSV schema.
    GenData(GenData),
    /// Resample, clean, split and scale a meter CSV.
    Preprocess(Preprocess),
    /// Pearson correlation matrix and the most correlated federation.
    Cluster(Cluster),
    /// Train one pooled model (scenario 0).
    TrainCentral(Simulate),
    /// Run a scenario from a config file.
    Simulate(Simulate),
    /// Privacy guarantee of the subsampled Gaussian mechanism.
    Accountant(Accountant),
    /// Print a finished run's tables and check its fingerprint.
    Report(Report),
}

#[derive(Args)]
struct GenData {
    /// TOML file with synthetic generator fields; flags override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    clients: Option<usize>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    shared_weight: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    base_load: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    acorn_group: Option<String>,
    #[arg(long)]
    id_prefix: Option<String>,
    /// Output CSV; standard output when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cadence {
    HalfHour,
    Hourly,
}

impl From<Cadence> for Resolution {
    fn from(c: Cadence) -> Self {
        match c {
            Cadence::HalfHour => Resolution::HalfHour,
            Cadence::Hourly => Resolution::Hour,
        }
    }
}

#[derive(Args)]
struct Input {
    /// Meter CSV with header `client_id,acorn_group,timestamp_iso8601,kwh`.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "half-hour")]
    cadence: Cadence,
}

#[derive(Args)]
struct Preprocess {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 24)]
    lookback: usize,
    #[arg(long, default_value_t = 1)]
    horizon: usize,
    #[arg(long, default_value_t = 0.75)]
    train_fraction: f64,
    /// Directory for `cleaned.csv` and `summary.csv`.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Auto,
    Exhaustive,
    Beam,
}

#[derive(Args)]
struct Cluster {
    #[command(flatten)]
    input: Input,
    /// Federation size.
    #[arg(long, short)]
    k: usize,
    /// Comma-separated ACORN groups to draw from.
    #[arg(long, value_delimiter = ',')]
    groups: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "auto")]
    strategy: Strategy,
    #[arg(long, default_value_t = 64)]
    beam_width: usize,
    #[arg(long, default_value_t = 0.75)]
    train_fraction: f64,
    /// Directory for `correlation.csv` and `selection.json`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Simulate {
    /// Scenario TOML; keys not given fall back to the scenario preset.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Scenario preset to use without a config file (0, A, B, C, D, E).
    #[arg(long)]
    scenario: Option<ScenarioId>,
    /// Override any config key, e.g. `--set federation.rounds=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Multiply rounds, epochs and (scenario D) client counts.
    #[arg(long)]
    scale: Option<f64>,
    /// Master seed for data, initialization and sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, relative to $FEDLOAD_OUTPUT_ROOT when set.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct Accountant {
    #[arg(long)]
    rounds: usize,
    /// Sampling ratio per round.
    #[arg(long)]
    q: f64,
    /// Noise multiplier.
    #[arg(long)]
    z: f64,
    #[arg(long, default_value_t = 4e-3)]
    delta: f64,
}

#[derive(Args)]
struct Report {
    /// Output directory of a `simulate` run.
    dir: PathBuf,
}

fn write_output(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = fs::File::create(p).map_err(|e| CliError::File(p.to_path_buf(), e))?;
            let mut w = io::BufWriter::new(file);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn gen_data(args: GenData) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::File(path.clone(), e))?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SyntheticSpec::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = args.$field.clone() { spec.$field = v; })*};
    }
    set!(days, shared_weight, noise_std, base_load, seed, acorn_group, id_prefix);
    if let Some(n) = args.clients {
        spec.n_clients = n;
    }
    let series = generate_synthetic(&spec)?;
    write_output(args.out.as_deref(), |w| Ok(write_csv(&series, w)?))
}

fn load(input: &Input) -> Result<Vec<TimeSeries>> {
    Ok(ingest_csv(&input.input, input.cadence.into())?)
}

fn preprocess(args: Preprocess) -> Result<()> {
    let series = load(&args.input)?;
    let prep = PrepConfig {
        lookback: args.lookback,
        horizon: args.horizon,
        train_fraction: args.train_fraction,
    };
    fs::create_dir_all(&args.out).map_err(|e| CliError::File(args.out.clone(), e))?;
    let mut cleaned = Vec::with_capacity(series.len());
    let mut summary = String::from(
        "client_id,acorn_group,scaler_min,scaler_max,train_windows,validation_windows,validation_out_of_range\n",
    );
    for s in &series {
        let hourly = match s.resolution {
            Resolution::HalfHour => resample_hourly(s)?,
            Resolution::Hour => s.clone(),
        };
        cleaned.push(clean(&hourly)?);
        let d = prepare_client(s, &prep)?;
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            d.client_id,
            d.acorn_group,
            d.scaler.min,
            d.scaler.max,
            d.train.len(),
            d.validation.len(),
            d.validation_out_of_range
        ));
    }
    let cleaned_path = args.out.join("cleaned.csv");
    write_output(Some(&cleaned_path), |w| Ok(write_csv(&cleaned, w)?))?;
    let summary_path = args.out.join("summary.csv");
    fs::write(&summary_path, summary).map_err(|e| CliError::File(summary_path.clone(), e))?;
    eprintln!("{} clients -> {}", series.len(), args.out.display());
    Ok(())
}

fn cluster(args: Cluster) -> Result<()> {
    let series = load(&args.input)?;
    let prep = PrepConfig {
        train_fraction: args.train_fraction,
        ..PrepConfig::default()
    };
    let clients = series
        .iter()
        .map(|s| prepare_client(s, &prep))
        .collect::<fedload::Result<Vec<_>>>()?;
    let ids: Vec<String> = clients.iter().map(|c| c.client_id.clone()).collect();
    let labels: Vec<String> = clients.iter().map(|c| c.acorn_group.clone()).collect();
    let train: Vec<&[f64]> = clients.iter().map(|c| c.train_series.as_slice()).collect();
    let matrix = correlation_matrix(&ids, &train)?;
    let strategy = match args.strategy {
        Strategy::Auto => SearchStrategy::Auto,
        Strategy::Exhaustive => SearchStrategy::Exhaustive,
        Strategy::Beam => SearchStrategy::Beam {
            width: args.beam_width,
        },
    };
    let selection = select_federation(&matrix, &labels, args.groups.as_deref(), args.k, strategy)?;
    let json = serde_json::to_string_pretty(&selection).map_err(fedload::Error::from)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| CliError::File(dir.clone(), e))?;
        write_output(Some(&dir.join("correlation.csv")), |w| Ok(matrix.write_csv(w)?))?;
        let path = dir.join("selection.json");
        fs::write(&path, format!("{json}\n")).map_err(|e| CliError::File(path.clone(), e))?;
    }
    out!("{json}");
    Ok(())
}

fn scenario_config(args: &Simulate, forced: Option<ScenarioId>) -> Result<ScenarioConfig> {
    let mut overrides = Vec::new();
    if let Some(id) = forced {
        overrides.push(format!("scenario=\"{id}\""));
    }
    if let Some(s) = args.scale {
        overrides.push(format!("scale={s}"));
    }
    if let Some(s) = args.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(dir) = &args.output_dir {
        overrides.push(format!("output_dir={:?}", dir.display().to_string()));
    }
    // Explicit --set flags win over the convenience flags above.
    overrides.extend(args.overrides.iter().cloned());
    let cfg = match (&args.config, args.scenario.or(forced)) {
        (Some(path), _) => ScenarioConfig::from_file(path, &overrides)?,
        (None, Some(id)) => ScenarioConfig::from_overrides(id, &overrides)?,
        (None, None) => {
            return Err(CliError::Usage(
                "give a --config file or a --scenario preset".into(),
            ))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(args: Simulate, forced: Option<ScenarioId>) -> Result<()> {
    let cfg = scenario_config(&args, forced)?;
    if args.dry_run {
        print!("{}", cfg.resolved().to_toml_string()?);
        return Ok(());
    }
    let quiet = args.quiet;
    let mut progress = |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    let result = run_scenario_with(&cfg, &mut progress)?;
    let dir = cfg.output_path();
    let files = emit_report(&result, &dir)?;
    print!("{}", fedload::scenarios::table_csv(&result));
    if !quiet {
        eprintln!("wrote {} files to {}", files.len(), dir.display());
    }
    Ok(())
}

fn accountant(args: Accountant) -> Result<()> {
    let mut ledger = PrivacyLedger::new();
    ledger.push_repeated(args.rounds, args.q, args.z)?;
    let (eps, alpha) = fedload::accountant::compose_and_convert(&ledger, args.delta)?;
    out!("epsilon,best_alpha,delta");
    out!("{eps},{alpha},{}", args.delta);
    out!();
    write_breakdown_csv(&ledger.breakdown(args.delta)?, io::stdout().lock())?;
    Ok(())
}

/// Render CSV text as right-aligned columns.
fn align(csv: &str) -> String {
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:>w$}", w = widths[c]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn report(args: Report) -> Result<()> {
    let read = |name: &str| {
        let p = args.dir.join(name);
        fs::read_to_string(&p).map_err(|e| CliError::File(p, e))
    };
    let config = ScenarioConfig::from_toml_str(&read("config.toml")?, &[])?;
    let recorded = read("fingerprint.txt")?;
    let actual = config.fingerprint()?;
    out!("scenario {}", config.scenario);
    print!("{}", align(&read("results.csv")?));
    if args.dir.join("clip_sweep.csv").exists() {
        out!();
        print!("{}", align(&read("clip_sweep.csv")?));
    }
    if recorded.trim() == actual {
        out!("\nfingerprint {actual} ok");
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "fingerprint mismatch: recorded {} but config hashes to {actual}",
            recorded.trim()
        )))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Preprocess(a) => preprocess(a),
        Command::Cluster(a) => cluster(a),
        Command::TrainCentral(a) => simulate(a, Some(ScenarioId::Central)),
        Command::Simulate(a) => simulate(a, None),
        Command::Accountant(a) => accountant(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // A closed pipe (e.g. `| head`) is not an error for the user.
        Err(CliError::Io(e) | CliError::Core(fedload::Error::Io(e)))
            if e.kind() == io::ErrorKind::BrokenPipe =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
