//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage, 2 data, 3 numeric failure,
//! 4 verification failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nnquant_core::baselines::IrlsOptions;
use nnquant_core::eval::{backtest, BacktestPlan, BacktestResult, Method, MixtureConfig, PlanEntry};
use nnquant_core::synth::{generate, ProcessKind, ProcessSpec};
use nnquant_core::{
    Aggregator, DistanceEngine, EtaSchedule, ExpertGrid, ExpertRule, QuantileLevel, Series, TruncationPolicy,
};
use serde::Serialize;
use thiserror::Error;

use crate::io::{format_series, load_dates_file, load_series_file, IoError};
use crate::output::{self, Format};
use crate::verify;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] IoError),
    #[error(transparent)]
    Core(#[from] nnquant_core::Error),
    #[error("{0}")]
    Numeric(String),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{failed} of {total} verification checks failed")]
    Verification { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use nnquant_core::Error as E;
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Write { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Verification { .. } => 4,
            CliError::Core(e) => match e {
                E::InvalidQuantileLevel(_) | E::InvalidGrid(_) | E::InvalidParameter(_) | E::UnsupportedSpec => 1,
                E::RankDeficient => 3,
                _ => 2,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nnquant", version, about = "Sequential quantile forecasting with nearest-neighbor experts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One-step-ahead forecast after the last value of a series.
    Predict(PredictArgs),
    /// Fit on prefixes y_1..y_m for each date m and score the forecast of y_{m+1}.
    Backtest(BacktestArgs),
    /// Write a seeded synthetic series.
    Synth(SynthArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EngineName {
    Incremental,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MethodName {
    QuantileExpertMixture,
    MeanExpertMixture,
    #[serde(rename = "QAR")]
    Qar,
    #[serde(rename = "AR")]
    Ar,
    #[serde(rename = "MA")]
    Ma,
    DayOfTheWeekMA,
    HoltWinters,
}

fn parse_method(s: &str) -> Result<MethodName, String> {
    let key: String = s
        .chars()
        .filter(|c| *c != '-' && *c != '_')
        .flat_map(char::to_lowercase)
        .collect();
    Ok(match key.as_str() {
        "quantileexpertmixture" | "qem" => MethodName::QuantileExpertMixture,
        "meanexpertmixture" | "mem" => MethodName::MeanExpertMixture,
        "qar" => MethodName::Qar,
        "ar" => MethodName::Ar,
        "ma" => MethodName::Ma,
        "dayoftheweekma" | "dowma" => MethodName::DayOfTheWeekMA,
        "holtwinters" | "hw" => MethodName::HoltWinters,
        _ => {
            return Err(format!(
                "unknown method {s:?}; expected QuantileExpertMixture, MeanExpertMixture, QAR, AR, MA, \
                 DayOfTheWeekMA or HoltWinters"
            ))
        }
    })
}

fn parse_tau(s: &str) -> Result<QuantileLevel, String> {
    QuantileLevel::parse(s).map_err(|e| e.to_string())
}

fn parse_eta(s: &str) -> Result<EtaSchedule, String> {
    let schedule = match s {
        "inv-sqrt" => EtaSchedule::InverseSqrt,
        _ => match s.strip_prefix("const:").map(str::parse::<f64>) {
            Some(Ok(eta)) => EtaSchedule::Constant(eta),
            _ => return Err(format!("expected inv-sqrt or const:<eta>, got {s:?}")),
        },
    };
    schedule.validate().map_err(|e| e.to_string())?;
    Ok(schedule)
}

/// A single autoregressive order or an inclusive range to sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderSpec {
    Single(usize),
    Sweep(usize, usize),
}

impl OrderSpec {
    pub fn orders(self) -> std::ops::RangeInclusive<usize> {
        match self {
            OrderSpec::Single(p) => p..=p,
            OrderSpec::Sweep(a, b) => a..=b,
        }
    }
}

impl Serialize for OrderSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            OrderSpec::Single(p) => s.serialize_u64(p as u64),
            OrderSpec::Sweep(a, b) => s.serialize_str(&format!("sweep:{a}..{b}")),
        }
    }
}

fn parse_order(s: &str) -> Result<OrderSpec, String> {
    let positive = |t: &str| match t.parse::<usize>() {
        Ok(p) if p >= 1 => Ok(p),
        _ => Err(format!("order must be a positive integer, got {t:?}")),
    };
    match s.strip_prefix("sweep:") {
        Some(range) => {
            let (a, b) = range
                .split_once("..")
                .ok_or_else(|| format!("expected sweep:<from>..<to>, got {s:?}"))?;
            let (a, b) = (positive(a)?, positive(b)?);
            if a > b {
                return Err(format!("empty order range {s:?}"));
            }
            Ok(OrderSpec::Sweep(a, b))
        }
        None => positive(s).map(OrderSpec::Single),
    }
}

/// Forecaster settings shared by `predict` and `backtest`.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Quantile level in (0, 1)
    #[arg(long, default_value = "0.5", value_parser = parse_tau)]
    pub tau: QuantileLevel,
    /// QuantileExpertMixture, MeanExpertMixture, QAR, AR, MA, DayOfTheWeekMA or HoltWinters
    #[arg(long, default_value = "QuantileExpertMixture", value_parser = parse_method)]
    pub method: MethodName,
    /// Largest window length k in the expert grid
    #[arg(long, default_value_t = 14)]
    pub k_max: usize,
    /// Largest neighbor count in the expert grid
    #[arg(long, default_value_t = 25)]
    pub lbar_max: usize,
    /// Clamp expert outputs to ±min(n^delta, lbar)
    #[arg(long, value_enum, default_value = "off")]
    pub truncation: Switch,
    /// Truncation exponent, in (0, 0.25)
    #[arg(long, default_value_t = TruncationPolicy::DEFAULT_DELTA)]
    pub delta: f64,
    /// Learning rate: inv-sqrt (1/sqrt(n)) or const:<eta>
    #[arg(long, default_value = "inv-sqrt", value_parser = parse_eta)]
    pub eta: EtaSchedule,
    /// Nearest-neighbor search
    #[arg(long, value_enum, default_value = "incremental")]
    pub engine: EngineName,
    /// AR/QAR order p, or sweep:<from>..<to> (backtest only)
    #[arg(long, default_value = "7", value_parser = parse_order)]
    pub order: OrderSpec,
    /// MA window
    #[arg(long, default_value_t = 7)]
    pub ma_window: usize,
    /// Season length for DayOfTheWeekMA and HoltWinters
    #[arg(long, default_value_t = 7)]
    pub season_length: usize,
    /// DayOfTheWeekMA: number of same-season values averaged (default: all)
    #[arg(long)]
    pub dow_window: Option<usize>,
    /// HoltWinters lattice step for alpha, beta, gamma
    #[arg(long, default_value_t = 0.1)]
    pub hw_step: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Series file: one number per line, optional leading '#' header
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Also emit the mixture forecast at every step
    #[arg(long)]
    pub trajectory: bool,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write here instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Series files, scored with the same dates
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Dates file: strictly increasing prefix lengths m, one per line
    #[arg(long, conflicts_with = "last")]
    pub dates: Option<PathBuf>,
    /// Use the last N origins of every series instead of a dates file
    #[arg(long)]
    pub last: Option<usize>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Machine-readable output instead of the tables
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessName {
    Iid,
    Ar1,
    Seasonal,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub process: ProcessName,
    #[arg(long)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// iid mean
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// Noise standard deviation
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// ar1 coefficient, |phi| < 1
    #[arg(long, default_value_t = 0.6)]
    pub phi: f64,
    /// Seasonal pattern, one value per position, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub amplitudes: Vec<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Run only these checks (2-9), comma separated
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}

/// Resolved settings, echoed into JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub tau: f64,
    pub method: MethodName,
    pub k_max: usize,
    pub lbar_max: usize,
    pub truncation: Switch,
    pub delta: f64,
    pub eta: EtaSchedule,
    pub engine: EngineName,
    pub order: OrderSpec,
    pub ma_window: usize,
    pub season_length: usize,
    pub dow_window: Option<usize>,
    pub hw_step: f64,
    pub inputs: Vec<PathBuf>,
    pub dates: Option<PathBuf>,
    pub last: Option<usize>,
}

impl RunConfig {
    fn new(command: &'static str, m: &ModelArgs, inputs: Vec<PathBuf>) -> Self {
        Self {
            command,
            tau: m.tau.value(),
            method: m.method,
            k_max: m.k_max,
            lbar_max: m.lbar_max,
            truncation: m.truncation,
            delta: m.delta,
            eta: m.eta,
            engine: m.engine,
            order: m.order,
            ma_window: m.ma_window,
            season_length: m.season_length,
            dow_window: m.dow_window,
            hw_step: m.hw_step,
            inputs,
            dates: None,
            last: None,
        }
    }
}

impl ModelArgs {
    fn mixture(&self) -> Result<MixtureConfig, CliError> {
        let truncation = match self.truncation {
            Switch::Off => TruncationPolicy::Off,
            Switch::On => TruncationPolicy::on(self.delta)?,
        };
        Ok(MixtureConfig {
            grid: ExpertGrid::uniform(self.k_max, self.lbar_max)?,
            eta: self.eta,
            truncation,
            engine: match self.engine {
                EngineName::Incremental => DistanceEngine::Incremental,
                EngineName::Naive => DistanceEngine::Naive,
            },
        })
    }

    /// One method per requested order (a single one unless sweeping).
    pub fn methods(&self) -> Result<Vec<Method>, CliError> {
        if self.ma_window == 0 || self.season_length == 0 || self.dow_window == Some(0) {
            return Err(CliError::Usage("windows and season length must be positive".into()));
        }
        if !(self.hw_step > 0.0 && self.hw_step <= 1.0) {
            return Err(CliError::Usage("hw-step must lie in (0, 1]".into()));
        }
        let single = |method| Ok(vec![method]);
        match self.method {
            MethodName::QuantileExpertMixture => single(Method::QuantileExpertMixture(self.mixture()?)),
            MethodName::MeanExpertMixture => single(Method::MeanExpertMixture(self.mixture()?)),
            MethodName::Qar => Ok(self
                .order
                .orders()
                .map(|order| Method::Qar {
                    order,
                    irls: IrlsOptions::default(),
                })
                .collect()),
            MethodName::Ar => Ok(self.order.orders().map(|order| Method::Ar { order }).collect()),
            MethodName::Ma => single(Method::Ma {
                window: self.ma_window,
            }),
            MethodName::DayOfTheWeekMA => single(Method::DayOfWeekMa {
                period: self.season_length,
                window: self.dow_window,
            }),
            MethodName::HoltWinters => single(Method::HoltWinters {
                season_length: self.season_length,
                grid_step: self.hw_step,
            }),
        }
    }
}

/// Runs one parsed command, writing results to `out` unless an output file
/// was requested.
pub fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Predict(args) => predict(args, out),
        Command::Backtest(args) => run_backtest(args, out),
        Command::Synth(args) => synth(args, out),
        Command::Verify(args) => run_verify(args, out),
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| CliError::Write {
            path: p.display().to_string(),
            source,
        }),
        None => out.write_all(text.as_bytes()).map_err(|source| CliError::Write {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn predict(args: PredictArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let methods = args.model.methods()?;
    let [method] = methods.as_slice() else {
        return Err(CliError::Usage("order sweeps are only available for backtest".into()));
    };
    let series = load_series_file(&args.input)?;
    let tau = args.model.tau;
    let y = series.values();
    let trajectory = if args.trajectory {
        Some(mixture_trajectory(method, &series, tau)?)
    } else {
        None
    };
    let forecast = match &trajectory {
        Some(t) => *t.last().expect("n + 1 forecasts"),
        None => method.predict_next(y, tau)?,
    };
    if !forecast.is_finite() {
        return Err(CliError::Numeric(format!("{} produced a non-finite forecast", method.name())));
    }
    let config = RunConfig::new("predict", &args.model, vec![args.input.clone()]);
    let doc = output::PredictDocument {
        config,
        method: method.name(),
        step: y.len() + 1,
        forecast,
        trajectory: trajectory.map(|t| output::trajectory_rows(&t, y)),
    };
    let text = output::render_predict(&doc, args.format.unwrap_or(Format::Csv));
    emit(&text, args.output.as_deref(), out)
}

/// Mixture forecasts `g_1, …, g_{n+1}`.
fn mixture_trajectory(method: &Method, series: &Series, tau: QuantileLevel) -> Result<Vec<f64>, CliError> {
    let (config, rule) = match method {
        Method::QuantileExpertMixture(c) => (c, ExpertRule::PinballQuantile(tau)),
        Method::MeanExpertMixture(c) => (c, ExpertRule::SquaredMean),
        _ => return Err(CliError::Usage("--trajectory needs an expert mixture method".into())),
    };
    let mut agg = Aggregator::new(config.grid.clone(), rule, config.eta, config.truncation, config.engine)?;
    let y = series.values();
    let mut forecasts = agg.forecasts(y)?;
    forecasts.push(agg.predict(y)?.aggregate);
    Ok(forecasts)
}

fn series_id(path: &Path, taken: &[PlanEntry]) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    if taken.iter().any(|e| e.id == stem) {
        path.display().to_string()
    } else {
        stem
    }
}

fn run_backtest(args: BacktestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let methods = args.model.methods()?;
    let shared_dates = match (&args.dates, args.last) {
        (Some(path), None) => Some(load_dates_file(path)?),
        (None, Some(0)) => return Err(CliError::Usage("--last must be positive".into())),
        (None, Some(_)) => None,
        _ => return Err(CliError::Usage("give either --dates or --last".into())),
    };
    let mut entries: Vec<PlanEntry> = Vec::with_capacity(args.input.len());
    for path in &args.input {
        let series = load_series_file(path)?;
        let dates = match (&shared_dates, args.last) {
            (Some(d), _) => d.clone(),
            (None, Some(last)) => {
                let n = series.len();
                if last >= n {
                    return Err(CliError::Usage(format!(
                        "--last {last} needs series longer than {last}; {} has {n} values",
                        path.display()
                    )));
                }
                (n - last..n).collect()
            }
            (None, None) => unreachable!("checked above"),
        };
        let id = series_id(path, &entries);
        entries.push(PlanEntry { id, series, dates });
    }
    let plan = BacktestPlan::new(entries, args.model.tau)?;
    let results: Vec<BacktestResult> = methods
        .iter()
        .map(|m| backtest(&plan, m))
        .collect::<Result<_, _>>()?;
    let best = output::best_index(&results);
    let mut config = RunConfig::new("backtest", &args.model, args.input.clone());
    config.dates = args.dates.clone();
    config.last = args.last;
    let text = match args.format {
        None => output::render_tables(&results, best, args.model.tau),
        Some(f) => output::render_backtest(&config, &results, best, f),
    };
    emit(&text, args.output.as_deref(), out)?;
    if results.iter().all(|r| r.report.n_points == 0) {
        return Err(CliError::Numeric("every backtest cell failed to produce a forecast".into()));
    }
    Ok(())
}

fn synth(args: SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let kind = match args.process {
        ProcessName::Iid => ProcessKind::IidGaussian {
            mu: args.mu,
            sigma: args.sigma,
        },
        ProcessName::Ar1 => ProcessKind::Ar1 {
            phi: args.phi,
            sigma: args.sigma,
        },
        ProcessName::Seasonal => ProcessKind::Seasonal {
            period: args.amplitudes.len(),
            amplitudes: args.amplitudes.clone(),
            sigma: args.sigma,
        },
    };
    let spec = ProcessSpec::new(kind, args.length, args.seed)?;
    let series = generate(&spec)?;
    let header = format!("synth {:?} length={} seed={}", args.process, args.length, args.seed).to_lowercase();
    emit(&format_series(series.values(), Some(&header)), args.output.as_deref(), out)
}

fn run_verify(args: VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let ids: Vec<u8> = if args.only.is_empty() {
        verify::ALL.to_vec()
    } else {
        args.only.clone()
    };
    if let Some(bad) = ids.iter().find(|id| !verify::ALL.contains(id)) {
        return Err(CliError::Usage(format!("no check numbered {bad}; available: 2-9")));
    }
    let mut failed = 0;
    for &id in &ids {
        let outcome = verify::run(id).expect("id checked");
        failed += usize::from(!outcome.passed);
        writeln!(out, "{outcome}").map_err(|source| CliError::Write {
            path: "<stdout>".into(),
            source,
        })?;
        let _ = out.flush();
    }
    if failed > 0 {
        return Err(CliError::Verification {
            failed,
            total: ids.len(),
        });
    }
    Ok(())
}
