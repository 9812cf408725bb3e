//! The `beta-survival` command line.
//!
//! Exit codes: `0` success, `2` usage or I/O errors, `3` data or training errors.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use crate::baselines::{fit_geometric_pointestimate, fit_logistic_at_horizon, GlmConfig};
use crate::beta_math::BetaParams;
use crate::data::{format_float, read_dataset, Dataset, IngestReport, ReadOptions};
use crate::evalkit::{evaluate_model, posterior_size_experiment, write_auc_report, PosteriorConfig};
use crate::gbrt::{fit_gbrt, fit_gbrt_logistic, GbrtConfig};
use crate::linear::{fit_linear, FitConfig};
use crate::model_io::{ModelFile, SavedModel};
use crate::ranking::{rank_at_horizon, write_rank_csv};
use crate::simgen::{gen_beta_geometric, gen_heterogeneity_sweep, gen_table1_mixture};
use crate::{Error, RiskModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "beta-survival", version, about = "Discrete-time survival regression with the beta-logistic model")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run on a single thread. Reductions are ordered either way, so results
    /// do not depend on the thread count.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV.
    Simulate(SimulateArgs),
    /// Fit a model to a dataset CSV and write it as JSON.
    Train(TrainArgs),
    /// Per-row beta parameters, event probability by the horizon, and survival curve.
    Predict(PredictArgs),
    /// Rank rows by the median of their projected event-probability prior.
    Rank(RankArgs),
    /// Horizon AUC for one or more models.
    Eval(EvalArgs),
    /// Compare beta-logistic and Laplace posterior variances on projected features.
    Posterior(PosteriorArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Generator {
    Table1,
    Sweep,
    Betageom,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    generator: Generator,
    /// Rows (per cohort for `table1`).
    #[arg(long)]
    n: usize,
    /// Censoring horizon.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    horizon: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Prior α for `betageom`.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Prior β for `betageom`.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Homogeneity level for `sweep`.
    #[arg(long, default_value_t = 0.0)]
    level: f64,
    /// Mean of the exponential parameter noise for `sweep`.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    #[value(name = "betalogistic-linear")]
    BetaLogisticLinear,
    #[value(name = "betalogistic-gbrt")]
    BetaLogisticGbrt,
    Logistic,
    Geometric,
    #[value(name = "logistic-gbrt")]
    LogisticGbrt,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    data: PathBuf,
    /// Column of row identifiers, excluded from the features.
    #[arg(long)]
    ids_column: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    #[command(flatten)]
    data: DataArgs,
    /// Labeling horizon (logistic models only).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    horizon: Option<u32>,
    /// JSON file with the model's training settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_model: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Weight multiplier for censored rows (after down-sampling them).
    #[arg(long)]
    censored_weight: Option<f64>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    horizon: u32,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    horizon: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Model JSON; repeat to compare several models. Labeled by file stem.
    #[arg(long, required = true)]
    model: Vec<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u32).range(1..))]
    horizons: Vec<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PosteriorArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5", value_parser = clap::value_parser!(u32).range(1..))]
    horizons: Vec<u32>,
    #[arg(long, default_value_t = 50)]
    d_projected: usize,
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Lib(Error::Io(e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Lib(Error::Csv(e))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let threads = if cli.deterministic { Some(1) } else { cli.threads };
    let result = match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(CliError::Usage(format!("cannot start {n} threads: {e}"))),
        },
        None => dispatch(cli.command),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Rank(a) => rank(a),
        Command::Eval(a) => eval(a),
        Command::Posterior(a) => posterior(a),
    }
}

fn print_summary(data: &Dataset, report: Option<&IngestReport>) {
    eprintln!(
        "rows: {}  features: {}  censored fraction: {:.4}",
        data.len(),
        data.n_features(),
        data.censored_fraction()
    );
    if let Some(r) = report.filter(|r| r.missing_cells > 0) {
        eprintln!(
            "missing cells: {} in {} rows (treated as 0 by linear models, routed left by trees)",
            r.missing_cells,
            r.rows_with_missing.len()
        );
    }
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let data = match a.generator {
        Generator::Table1 => gen_table1_mixture(a.n, a.horizon, a.seed)?,
        Generator::Sweep => gen_heterogeneity_sweep(a.n, a.level, a.noise, a.horizon, a.seed)?,
        Generator::Betageom => {
            let params = BetaParams::new(a.alpha, a.beta).map_err(|e| CliError::Usage(e.to_string()))?;
            Dataset::new(Vec::new(), gen_beta_geometric(params, a.n, a.horizon, a.seed)?)
        }
    };
    data.write_csv_path(&a.out)?;
    print_summary(&data, None);
    println!("wrote {}", a.out.display());
    Ok(())
}

fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", p.display())))
        }
    }
}

fn train(a: TrainArgs) -> CliResult<()> {
    let needs_horizon = matches!(a.model, ModelKind::Logistic | ModelKind::LogisticGbrt);
    let horizon = match (needs_horizon, a.horizon) {
        (true, None) => return Err(CliError::Usage("--horizon is required for logistic models".into())),
        (false, Some(_)) => {
            return Err(CliError::Usage("--horizon applies to logistic models only".into()))
        }
        (_, h) => h.unwrap_or(0),
    };
    let opts = ReadOptions {
        ids_column: a.data.ids_column.clone(),
        censored_weight: a.censored_weight,
        ..ReadOptions::training()
    };
    let (data, report) = read_dataset(fs::File::open(&a.data.data)?, &opts)?;
    print_summary(&data, Some(&report));
    let obs = &data.observations;
    let names = data.feature_names.clone();
    let config = a.config.as_deref();

    let (model, loss, iterations) = match a.model {
        ModelKind::BetaLogisticLinear => {
            let mut cfg: FitConfig = read_config(config)?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let (m, r) = fit_linear(obs, &cfg)?;
            if !r.converged {
                eprintln!("warning: stopped after {} epochs without reaching the gradient tolerance", r.epochs);
            }
            (SavedModel::BetaLogisticLinear(m.with_feature_names(names)), r.final_nll, r.epochs)
        }
        ModelKind::BetaLogisticGbrt => {
            let mut cfg: GbrtConfig = read_config(config)?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let (mut m, r) = fit_gbrt(obs, &cfg)?;
            m.feature_names = names;
            (SavedModel::BetaLogisticGbrt(m), *r.round_losses.last().unwrap_or(&f64::NAN), r.rounds)
        }
        ModelKind::LogisticGbrt => {
            let mut cfg: GbrtConfig = read_config(config)?;
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let (mut m, r) = fit_gbrt_logistic(obs, horizon, &cfg)?;
            m.feature_names = names;
            (SavedModel::LogisticGbrt(m), *r.round_losses.last().unwrap_or(&f64::NAN), r.rounds)
        }
        ModelKind::Logistic => {
            let cfg: GlmConfig = read_config(config)?;
            let (mut m, r) = fit_logistic_at_horizon(obs, horizon, &cfg)?;
            m.feature_names = names;
            eprintln!("rows with a determinable label at horizon {horizon}: {}", r.n_used);
            (SavedModel::Logistic(m), r.loss, r.iterations)
        }
        ModelKind::Geometric => {
            let cfg: GlmConfig = read_config(config)?;
            let (mut m, r) = fit_geometric_pointestimate(obs, &cfg)?;
            m.feature_names = names;
            (SavedModel::Geometric(m), r.loss, r.iterations)
        }
    };
    println!("final loss: {loss}");
    println!("iterations: {iterations}");
    ModelFile::new(model, data.schema)?.save(&a.out_model)?;
    println!("wrote {}", a.out_model.display());
    Ok(())
}

/// Reads a prediction input against the model's schema. A zero-byte file is
/// treated as having no rows.
fn read_for_model(file: &ModelFile, args: &DataArgs, require_outcomes: bool) -> CliResult<Dataset> {
    let bytes = fs::read(&args.data)?;
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Ok(Dataset {
            feature_names: file.schema.feature_names(),
            ids: args.ids_column.as_ref().map(|_| Vec::new()),
            schema: file.schema.clone(),
            ..Dataset::default()
        });
    }
    let opts = ReadOptions {
        ids_column: args.ids_column.clone(),
        schema: Some(file.schema.clone()),
        censored_weight: None,
        require_outcomes,
    };
    let (data, report) = read_dataset(bytes.as_slice(), &opts)?;
    if report.missing_cells > 0 {
        eprintln!("missing cells: {}", report.missing_cells);
    }
    Ok(data)
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::BufWriter::new(io::stdout().lock())),
    })
}

fn row_ids(data: &Dataset) -> Vec<String> {
    match &data.ids {
        Some(ids) => ids.clone(),
        None => (0..data.len()).map(|i| i.to_string()).collect(),
    }
}

fn predict(a: PredictArgs) -> CliResult<()> {
    let file = ModelFile::load(&a.model)?;
    let data = read_for_model(&file, &a.data, false)?;
    if let SavedModel::Logistic(m) = &file.model {
        if m.horizon != a.horizon {
            eprintln!(
                "note: logistic model was trained at horizon {}; p_event_by_h is its fixed-horizon probability",
                m.horizon
            );
        }
    }
    let h = a.horizon;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(output(a.out.as_deref())?);
    let mut header: Vec<String> = Vec::new();
    if let Some(col) = &a.data.ids_column {
        header.push(col.clone());
    }
    header.extend(["alpha", "beta", "p_event_by_h"].map(String::from));
    header.extend((1..=h).map(|t| format!("s_{t}")));
    w.write_record(&header)?;

    let rows = data
        .observations
        .iter()
        .map(|o| {
            let x = &o.features;
            let params = file.model.beta_params(x).transpose()?;
            let risk = file.model.risk_score(x, h)?;
            let curve = file.model.survival_curve(x, h).transpose()?;
            Ok((params, risk, curve))
        })
        .collect::<crate::Result<Vec<_>>>()?;
    for (k, (params, risk, curve)) in rows.into_iter().enumerate() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(ids) = &data.ids {
            rec.push(ids[k].clone());
        }
        rec.push(params.map_or(String::new(), |p| format_float(p.alpha)));
        rec.push(params.map_or(String::new(), |p| format_float(p.beta)));
        rec.push(format_float(risk));
        match curve {
            Some(c) => rec.extend(c.into_iter().map(format_float)),
            None => rec.extend((1..=h).map(|_| String::new())),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn rank(a: RankArgs) -> CliResult<()> {
    let file = ModelFile::load(&a.model)?;
    let data = read_for_model(&file, &a.data, false)?;
    let items = row_ids(&data)
        .into_iter()
        .zip(&data.observations)
        .map(|(id, o)| {
            let params = file.model.beta_params(&o.features).ok_or_else(|| {
                Error::Unsupported(format!(
                    "ranking needs a beta-logistic model, got {}",
                    file.model.model_type()
                ))
            })??;
            Ok((id, params))
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let ranked = rank_at_horizon(&items, a.horizon)?;
    let failed = ranked.iter().filter(|r| r.projection_failed).count();
    if failed > 0 {
        eprintln!("warning: {failed} rows fell back to the mean-matched projection");
    }
    write_rank_csv(output(a.out.as_deref())?, &ranked)?;
    Ok(())
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let mut rows = Vec::new();
    for path in &a.model {
        let file = ModelFile::load(path)?;
        let data = read_for_model(&file, &a.data, true)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.model.model_type().to_string());
        for e in evaluate_model(&file.model, &data.observations, &a.horizons)? {
            rows.push((label.clone(), e));
        }
    }
    write_auc_report(output(a.out.as_deref())?, &rows)?;
    Ok(())
}

fn posterior(a: PosteriorArgs) -> CliResult<()> {
    let (data, report) = read_dataset(fs::File::open(&a.data)?, &ReadOptions::training())?;
    print_summary(&data, Some(&report));
    let cfg = PosteriorConfig {
        horizons: a.horizons,
        d_projected: a.d_projected,
        seed: a.seed,
        train_fraction: a.train_fraction,
        ..PosteriorConfig::default()
    };
    let result = posterior_size_experiment(&data.observations, &cfg)?;
    result.write_csv(output(a.out.as_deref())?)?;
    eprintln!(
        "beta-logistic variance below full Laplace at every horizon: {}",
        if result.expectation_met() { "yes" } else { "no" }
    );
    Ok(())
}
