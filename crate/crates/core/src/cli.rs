//! Command-line front end. Exit codes: 0 success, 2 configuration or usage
//! error, 3 infeasible model, 4 numerical failure.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{AppConfig, ConfigError};
use crate::data::{synth_generate, DataError, DataTable};
use crate::eval::{
    case_split, evaluate_checkpoints, run_baselines, run_whr_study, write_whr_csv, EvalError,
};
use crate::forecast::{ForecastError, ForecastModel};
use crate::ies::{build_qp, ex_post_evaluate, IesError, ScenarioSeries};
use crate::qp::{QpError, SolveOptions};
use crate::train::{train, write_log_csv, TrainError, TrainMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

/// Caps worker threads when set.
pub const THREADS_ENV: &str = "IES_E2E_THREADS";

/// Name of the effective configuration written into every output directory.
pub const CONFIG_ECHO: &str = "effective_config.json";

#[derive(Debug, Parser)]
#[command(name = "ies-e2e", version, about = "End-to-end learnable operation of a hydrogen-based integrated energy system")]
pub struct Cli {
    /// Overrides every seed the command uses.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Writes the (first) dispatch QP instance as JSON to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub dump_qp: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Decoupled,
    E2e,
}

impl From<ModeArg> for TrainMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Decoupled => TrainMode::Decoupled,
            ModeArg::E2e => TrainMode::EndToEnd,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Writes a synthetic hourly table as CSV.
    GenData {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        days: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Trains one forecaster on the configured data.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        out_checkpoint: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Optimal/Decoupled/End-to-End comparison, or evaluation of given checkpoints.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Evaluate these checkpoints instead of training.
        #[arg(long, num_args = 1..)]
        checkpoint: Vec<PathBuf>,
        /// Comma-separated demand scales.
        #[arg(long, value_delimiter = ',')]
        cases: Option<Vec<f64>>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Perfect-information dispatch of one scenario.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scenario_csv: PathBuf,
        #[arg(long)]
        out_schedule: PathBuf,
    },
    /// Waste heat recovery study over data center workloads.
    Whr {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<QpError> for CliError {
    fn from(e: QpError) -> Self {
        match e {
            QpError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            QpError::Dimension(_) | QpError::NotConvex(_) | QpError::Io(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<IesError> for CliError {
    fn from(e: IesError) -> Self {
        match e {
            IesError::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            IesError::Qp(q) => q.into(),
            IesError::InconsistentSolution(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ForecastError> for CliError {
    fn from(e: ForecastError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Forecast(f) => f.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Ies(i) => i.into(),
            TrainError::Forecast(f) => f.into(),
            TrainError::Data(d) => d.into(),
            TrainError::TooManySkips { .. } | TrainError::NonFinite(_) => CliError::Numerical(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Ies(i) => i.into(),
            EvalError::Forecast(f) => f.into(),
            EvalError::Train(t) => t.into(),
            EvalError::Data(d) => d.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Caps the global worker pool at `IES_E2E_THREADS` when set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn echo_config(cfg: &AppConfig, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_ECHO), cfg.to_json() + "\n")?;
    Ok(())
}

fn dump_qp(path: Option<&Path>, cfg: &AppConfig, scenario: &ScenarioSeries, eps: f64) -> Result<(), CliError> {
    let Some(path) = path else {
        return Ok(());
    };
    let m = build_qp(&cfg.ies, scenario)?.regularized(eps);
    let names = m.index.row_names();
    m.qp.write_json(BufWriter::new(File::create(path)?), Some(&names))?;
    log::info!("wrote QP instance to {}", path.display());
    Ok(())
}

fn load(cfg_path: &Path, seed: Option<u64>) -> Result<(AppConfig, DataTable), CliError> {
    let mut cfg = AppConfig::from_file(cfg_path)?;
    if let Some(s) = seed {
        cfg.training.seed = s;
        let n = cfg.evaluation.seeds.len() as u64;
        cfg.evaluation.seeds = (s..s + n).collect();
    }
    let table = cfg.data.load(&base_dir(cfg_path))?;
    Ok((cfg, table))
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let dump = cli.dump_qp.as_deref();
    match cli.command {
        Command::GenData { config, days, out } => {
            let mut cfg = match &config {
                Some(p) => AppConfig::from_file(p)?,
                None => AppConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.data.seed = s;
            }
            if let Some(d) = days {
                cfg.data.days = d;
            }
            if cfg.data.days == 0 {
                return Err(CliError::Usage("--days must be positive".into()));
            }
            let table = synth_generate(cfg.data.seed, cfg.data.days, &cfg.data.profile);
            let file = File::create(&out).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out.display())))?;
            table.write_csv(BufWriter::new(file))?;
            echo_config(&cfg, &parent_dir(&out))?;
            println!("wrote {} rows to {}", table.len(), out.display());
        }
        Command::Train {
            config,
            mode,
            out_checkpoint,
            epochs,
        } => {
            let (mut cfg, table) = load(&config, cli.seed)?;
            if let Some(e) = epochs {
                cfg.training.epochs = e;
            }
            cfg.training.mode = mode.into();
            cfg.validate()?;
            let data = case_split(&cfg, &table, 1.0)?;
            dump_qp(dump, &cfg, &data.train[0].actual, cfg.training.qp_eps)?;
            let norm = crate::data::fit_normalizer(&data.train)?;
            let model = ForecastModel::init(cfg.training.model, norm, cfg.training.seed)?;
            let out = train(model, &data.train, &data.val, &cfg.ies, &cfg.training)?;
            let dir = parent_dir(&out_checkpoint);
            fs::create_dir_all(&dir)?;
            out.model.write_json(BufWriter::new(File::create(&out_checkpoint)?))?;
            write_log_csv(&out.log, BufWriter::new(File::create(dir.join("train_log.csv"))?))?;
            echo_config(&cfg, &dir)?;
            println!(
                "trained {} epochs, best epoch {}, checkpoint {}",
                out.log.len(),
                out.best_epoch,
                out_checkpoint.display()
            );
        }
        Command::Eval {
            config,
            checkpoint,
            cases,
            epochs,
            out_dir,
        } => {
            let (mut cfg, table) = load(&config, cli.seed)?;
            if let Some(c) = cases {
                cfg.evaluation.scales = c;
            }
            if let Some(e) = epochs {
                cfg.training.epochs = e;
            }
            cfg.validate()?;
            echo_config(&cfg, &out_dir)?;
            if dump.is_some() {
                let data = case_split(&cfg, &table, cfg.evaluation.scales[0])?;
                dump_qp(dump, &cfg, &data.test[0].actual, cfg.evaluation.qp_eps)?;
            }
            let report = if checkpoint.is_empty() {
                run_baselines(&cfg, &table, Some(&out_dir))?
            } else {
                let models = checkpoint
                    .iter()
                    .map(|p| {
                        let m = ForecastModel::read_json(BufReader::new(File::open(p)?))?;
                        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                        Ok((name, m))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                evaluate_checkpoints(&cfg, &table, &models, Some(&out_dir))?
            };
            for c in &report.cases {
                let red = c.reduction_pct.map(|r| format!("{r:.2}%")).unwrap_or_else(|| "-".into());
                println!("scale {}: optimal {:.2}, reduction {red}", c.scale, c.oracle.total);
                for m in &c.methods {
                    println!("  {}: total {:.2}", m.method, m.cost.total);
                }
            }
        }
        Command::Solve {
            config,
            scenario_csv,
            out_schedule,
        } => {
            let mut cfg = AppConfig::from_file(&config)?;
            let scenario = ScenarioSeries::read_csv(BufReader::new(File::open(&scenario_csv).map_err(|e| {
                CliError::Usage(format!("cannot read {}: {e}", scenario_csv.display()))
            })?))?;
            cfg.ies.horizon_steps = scenario.horizon();
            cfg.training.model.horizon = scenario.horizon();
            cfg.validate()?;
            let eps = cfg.evaluation.qp_eps;
            dump_qp(dump, &cfg, &scenario, eps)?;
            let opts = SolveOptions::with_tol(cfg.evaluation.qp_tol);
            let m = build_qp(&cfg.ies, &scenario)?.regularized(eps);
            let d = m.dispatch(&scenario, &opts)?;
            let r = ex_post_evaluate(&cfg.ies, &d.schedule, &scenario)?;
            let dir = parent_dir(&out_schedule);
            fs::create_dir_all(&dir)?;
            d.schedule.write_csv(BufWriter::new(File::create(&out_schedule)?))?;
            echo_config(&cfg, &dir)?;
            println!("operating cost {:.6}", r.total_cost);
        }
        Command::Whr {
            config,
            checkpoint,
            out,
        } => {
            let (cfg, table) = load(&config, cli.seed)?;
            echo_config(&cfg, &out)?;
            let data = case_split(&cfg, &table, 1.0)?;
            dump_qp(dump, &cfg, &data.test[0].actual, cfg.evaluation.qp_eps)?;
            let model = match &checkpoint {
                Some(p) => Some(ForecastModel::read_json(BufReader::new(File::open(p)?))?),
                None => None,
            };
            let opts = SolveOptions::with_tol(cfg.evaluation.qp_tol);
            let rows = run_whr_study(
                &cfg.ies,
                &data.test,
                &cfg.evaluation.workloads,
                model.as_ref(),
                cfg.evaluation.qp_eps,
                &opts,
            )?;
            write_whr_csv(&rows, &out)?;
            for r in &rows {
                println!(
                    "workload {:>3.0}%: without {:.2}, with {:.2}, reduction {:.2}%",
                    100.0 * r.workload,
                    r.oracle_cost_without_whr,
                    r.oracle_cost_with_whr,
                    r.oracle_reduction_pct
                );
            }
        }
    }
    Ok(())
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
