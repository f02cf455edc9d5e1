//! Command-line front end.
//!
//! Every command resolves a [`RunConfig`] (file plus `--set` overrides),
//! runs it, and writes CSV files and a `summary.json` whose provenance block
//! holds the fully resolved config. Exit status is 0 on success, 2 when a
//! solver fails to converge (outputs that were produced are still written)
//! and 3 for configuration or usage errors.

pub mod config;
pub mod output;
pub mod units;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{load_config, ConfigError, CustomConfig, CustomKind, EventConfig, RunConfig};
pub use output::{fmt_num, OutputError, Summary};
pub use units::RawValue;

use crate::continuation::{
    analyze, trace_model_branch, trace_model_fold_locus, ContinuationError, ModelFamily,
};
use crate::model::{Mode, ModelParams, ParamRef};
use crate::numerics::NumericsError;
use crate::scenarios::{run_all, steady_state, ScenarioError, CAMPAIGNS};
use output::{Provenance, ScenarioSummary, SingularEntry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Solver(String),
    #[error(transparent)]
    Output(#[from] OutputError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Output(_) => EXIT_IO,
        }
    }
}

impl From<ContinuationError> for CliError {
    fn from(e: ContinuationError) -> Self {
        match e {
            ContinuationError::InvalidRange { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        CliError::Solver(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "endex", version, about = "Endex carboniser/calciner steady states, stability and transients")]
pub struct Cli {
    /// More logging (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Parameter override, e.g. `--set "Fs=20 kg/s"`.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub set: Vec<String>,
    /// Output directory (defaults to the config's `output_dir`, then `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scenarios run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run everything a config file (or `summary.json`) describes; a campaign
    /// name is accepted in place of a file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run a built-in campaign.
    Scenario {
        /// One of the campaign names; `list` prints them.
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Solve for a single steady state and print it.
    Steady {
        #[arg(long, default_value = "endex")]
        mode: String,
        #[command(flatten)]
        common: Common,
    },
    /// Trace a steady-state branch.
    Sweep {
        #[arg(long)]
        param: ParamRef,
        #[arg(long)]
        lo: String,
        #[arg(long)]
        hi: String,
        #[arg(long)]
        descending: bool,
        #[arg(long, default_value = "endex")]
        mode: String,
        #[command(flatten)]
        common: Common,
    },
    /// Integrate a transient.
    Integrate {
        #[arg(long)]
        duration: String,
        /// feed, steady_state or steady_temperatures.
        #[arg(long, default_value = "feed")]
        initial: String,
        #[arg(long)]
        interval: Option<String>,
        /// Timed change `TIME,NAME,VALUE`, e.g. `--event "100 s,Fs,0 kg/s"`.
        #[arg(long = "event")]
        events: Vec<String>,
        #[arg(long, default_value = "endex")]
        mode: String,
        #[command(flatten)]
        common: Common,
    },
    /// Eigenvalues of the Jacobian at a state given as comma-separated SI values.
    Eig {
        #[arg(long)]
        state: String,
        #[arg(long, default_value = "endex")]
        mode: String,
        #[command(flatten)]
        common: Common,
    },
    /// Continue a fold of a branch in a second parameter.
    FoldLocus {
        #[arg(long)]
        param: ParamRef,
        #[arg(long)]
        lo: String,
        #[arg(long)]
        hi: String,
        #[arg(long)]
        second: ParamRef,
        #[arg(long)]
        second_lo: String,
        #[arg(long)]
        second_hi: String,
        /// Which fold of the branch, in order of detection.
        #[arg(long, default_value_t = 0)]
        fold: usize,
        #[arg(long, default_value = "endex")]
        mode: String,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_mode(s: &str) -> Result<Mode, CliError> {
    match s {
        "endex" => Ok(Mode::Endex),
        "standalone" => Ok(Mode::Standalone),
        other => Err(CliError::Usage(format!("mode `{other}` is not endex or standalone"))),
    }
}

fn text(s: &str) -> RawValue {
    let t = s.trim();
    t.parse::<f64>().map(RawValue::Number).unwrap_or_else(|_| RawValue::Text(t.to_string()))
}

/// Loads the config named in `common` and applies `--set` overrides.
fn base_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    for entry in &common.set {
        let (name, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects NAME=VALUE, got `{entry}`")))?;
        cfg.params.insert(name.trim().to_string(), text(value));
    }
    Ok(cfg)
}

fn output_dir(explicit: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Output(OutputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs every scenario of `cfg` and writes `out/<name>/*.csv` and
/// `out/summary.json`.
pub fn execute(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<Summary, CliError> {
    let resolved = cfg.resolve()?;
    if resolved.specs.is_empty() {
        return Err(CliError::Usage(
            "nothing to run: the config names no scenario and has no [custom] table".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {jobs} workers: {e}")))?;
    let results = pool.install(|| run_all(&resolved.specs, &resolved.settings));

    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write_config(out, &cfg.resolved(&resolved))?;
    let mut scenarios: Vec<ScenarioSummary> = Vec::new();
    let mut failures = Vec::new();
    for (spec, res) in resolved.specs.iter().zip(results) {
        match res {
            Ok(r) => {
                let mut s = output::write_result(&out.join(&spec.name), &r)?;
                s.output = format!("{}/{}", spec.name, s.output);
                scenarios.push(s);
            }
            Err(e @ ScenarioError::Params { .. }) => return Err(CliError::Usage(e.to_string())),
            Err(e) => {
                log::error!("{e}");
                failures.push(e.to_string());
            }
        }
    }
    let truncated = !failures.is_empty() || scenarios.iter().any(|s| s.truncated);
    let summary = Summary {
        provenance: Provenance::new(cfg.resolved(&resolved)),
        truncated,
        failures,
        scenarios,
    };
    output::write_summary(&out.join("summary.json"), &summary)?;
    if truncated {
        return Err(CliError::Solver(format!(
            "incomplete run, partial results in {}",
            out.display()
        )));
    }
    Ok(summary)
}

/// Writes `config.json`, the resolved config, which `run` accepts as is.
fn write_config(out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let path = out.join("config.json");
    let text = serde_json::to_string_pretty(cfg).map_err(OutputError::from)?;
    std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
}

#[derive(Debug, Serialize)]
struct PointReport {
    mode: Mode,
    state: Vec<f64>,
    residual_norm: f64,
    /// `[re, im]` pairs, 1/s.
    eigenvalues: Vec<[f64; 2]>,
    stability: crate::numerics::StabilityClass,
    derived: Option<crate::continuation::Derived>,
}

fn point_report(mode: Mode, p: &ModelParams, x: &[f64]) -> Result<PointReport, CliError> {
    let mu = p.get(ParamRef::T1In);
    let family = ModelFamily::new(mode, *p, ParamRef::T1In);
    let mut f = vec![0.0; mode.dim()];
    mode.rhs_into(x, p, &mut f).map_err(|e| CliError::Usage(e.to_string()))?;
    let residual = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rec = analyze(&family, mu, x, residual)?;
    Ok(PointReport {
        mode,
        state: rec.state,
        residual_norm: residual,
        eigenvalues: rec.eigen.values.iter().map(|l| [l.re, l.im]).collect(),
        stability: rec.stability,
        derived: rec.derived,
    })
}

fn print_json<T: Serialize>(v: &T) -> Result<(), CliError> {
    use std::io::Write;
    let s = serde_json::to_string_pretty(v).map_err(OutputError::from)?;
    // A closed pipe (`| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout().lock(), "{s}");
    Ok(())
}

#[derive(Debug, Serialize)]
struct LocusSummary {
    provenance: Provenance,
    truncated: bool,
    second: ParamRef,
    fold: SingularEntry,
    points: usize,
    lost_below: bool,
    lost_above: bool,
}

fn fold_locus(
    mode: Mode,
    cfg: RunConfig,
    (param, lo, hi): (ParamRef, f64, f64),
    (second, second_lo, second_hi): (ParamRef, f64, f64),
    which: usize,
    out: &Path,
) -> Result<(), CliError> {
    let resolved = cfg.resolve()?;
    let p = resolved.params;
    // A reversed range traces the branch from its upper end.
    let mut ctrl = resolved.settings.step.clone();
    ctrl.descending = lo > hi;
    let ctrl = &ctrl;
    let b = trace_model_branch(mode, &p, param, (lo.min(hi), lo.max(hi)), ctrl)?;
    let fold = b
        .folds()
        .nth(which)
        .ok_or_else(|| CliError::Solver(format!("branch has {} folds, asked for #{which}", b.folds().count())))?;
    let l = trace_model_fold_locus(mode, &p, param, fold, second, (second_lo, second_hi), ctrl)?;
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write_config(out, &cfg.resolved(&resolved))?;
    output::write_branch_csv(&out.join("branch.csv"), mode, &b)?;
    let n = output::write_locus_csv(&out.join("locus.csv"), mode, &l)?;
    let summary = LocusSummary {
        provenance: Provenance::new(cfg.resolved(&resolved)),
        truncated: l.lost_below || l.lost_above,
        second,
        fold: fold.into(),
        points: n,
        lost_below: l.lost_below,
        lost_above: l.lost_above,
    };
    let path = out.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(OutputError::from)?;
    std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(())
}

fn param_value(p: ParamRef, raw: &str) -> Result<f64, CliError> {
    Ok(config::parse_param_value(p, &text(raw))?)
}

fn custom(cfg: &mut RunConfig, c: CustomConfig) -> Result<(), CliError> {
    if cfg.scenario.is_some() {
        return Err(CliError::Usage("the config names a scenario; use `run` for it".into()));
    }
    cfg.custom = Some(c);
    Ok(())
}

fn parse_event(s: &str) -> Result<EventConfig, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    let [time, param, value] = parts.as_slice() else {
        return Err(CliError::Usage(format!("--event expects TIME,NAME,VALUE, got `{s}`")));
    };
    Ok(EventConfig {
        time: text(time),
        param: param.trim().parse().map_err(CliError::Usage)?,
        value: text(value),
    })
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, out, jobs } => {
            let name = config.to_string_lossy();
            let cfg = if !config.exists() && CAMPAIGNS.contains(&name.as_ref()) {
                RunConfig {
                    scenario: Some(name.into_owned()),
                    ..RunConfig::default()
                }
            } else {
                load_config(&config)?
            };
            let dir = output_dir(out.as_deref(), &cfg);
            execute(&cfg, &dir, jobs).map(|_| ())
        }
        Command::Scenario { name, common } => {
            if name == "list" {
                use std::io::Write;
                let mut out = std::io::stdout().lock();
                for c in CAMPAIGNS {
                    let _ = writeln!(out, "{c}");
                }
                return Ok(());
            }
            let mut cfg = base_config(&common)?;
            cfg.custom = None;
            cfg.scenario = Some(name);
            let dir = output_dir(common.out.as_deref(), &cfg);
            execute(&cfg, &dir, common.jobs).map(|_| ())
        }
        Command::Steady { mode, common } => {
            let mode = parse_mode(&mode)?;
            let p = base_config(&common)?.resolve()?.params;
            let x = steady_state(mode, &p)?;
            print_json(&point_report(mode, &p, &x)?)
        }
        Command::Eig { state, mode, common } => {
            let mode = parse_mode(&mode)?;
            let p = base_config(&common)?.resolve()?.params;
            let x: Vec<f64> = state
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("--state: {e}")))?;
            if x.len() != mode.dim() {
                return Err(CliError::Usage(format!("--state needs {} values", mode.dim())));
            }
            print_json(&point_report(mode, &p, &x)?)
        }
        Command::Sweep { param, lo, hi, descending, mode, common } => {
            let mut cfg = base_config(&common)?;
            let c = CustomConfig {
                name: format!("sweep_{param}"),
                mode: parse_mode(&mode)?,
                kind: CustomKind::Branch,
                param: Some(param),
                lo: Some(text(&lo)),
                hi: Some(text(&hi)),
                descending,
                duration: None,
                initial: None,
                state: None,
                output_interval: None,
                events: Vec::new(),
            };
            custom(&mut cfg, c)?;
            let dir = output_dir(common.out.as_deref(), &cfg);
            execute(&cfg, &dir, common.jobs).map(|_| ())
        }
        Command::Integrate { duration, initial, interval, events, mode, common } => {
            let mut cfg = base_config(&common)?;
            let c = CustomConfig {
                name: "integrate".into(),
                mode: parse_mode(&mode)?,
                kind: CustomKind::Trajectory,
                param: None,
                lo: None,
                hi: None,
                descending: false,
                duration: Some(text(&duration)),
                initial: Some(initial),
                state: None,
                output_interval: interval.as_deref().map(text),
                events: events.iter().map(|e| parse_event(e)).collect::<Result<_, _>>()?,
            };
            custom(&mut cfg, c)?;
            let dir = output_dir(common.out.as_deref(), &cfg);
            execute(&cfg, &dir, common.jobs).map(|_| ())
        }
        Command::FoldLocus { param, lo, hi, second, second_lo, second_hi, fold, mode, common } => {
            let mut cfg = base_config(&common)?;
            let mode = parse_mode(&mode)?;
            let range = (param, param_value(param, &lo)?, param_value(param, &hi)?);
            let second_range = (second, param_value(second, &second_lo)?, param_value(second, &second_hi)?);
            let descending = range.1 > range.2;
            let (lo, hi) = if descending { (hi, lo) } else { (lo, hi) };
            custom(
                &mut cfg,
                CustomConfig {
                    name: format!("fold_locus_{param}_{second}"),
                    mode,
                    kind: CustomKind::Branch,
                    param: Some(param),
                    lo: Some(text(&lo)),
                    hi: Some(text(&hi)),
                    descending,
                    duration: None,
                    initial: None,
                    state: None,
                    output_interval: None,
                    events: Vec::new(),
                },
            )?;
            let dir = output_dir(common.out.as_deref(), &cfg);
            fold_locus(mode, cfg, range, second_range, fold, &dir)
        }
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parameter entries in config syntax, for callers building configs in code.
pub fn params_entries(p: &ModelParams) -> BTreeMap<String, RawValue> {
    config::params_table(p)
}
