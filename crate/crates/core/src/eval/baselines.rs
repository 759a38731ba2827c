use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{evaluate_forecaster, evaluate_oracle, CostSummary, EvalError, MethodEval, Metrics};
use crate::config::AppConfig;
use crate::data::{fit_normalizer, make_windows, split, DataTable, Sample};
use crate::forecast::ForecastModel;
use crate::qp::SolveOptions;
use crate::train::{train, write_log_csv, EpochLog, TrainMode, TrainingConfig};

pub const METHOD_ORACLE: &str = "optimal";

pub fn method_name(mode: TrainMode) -> &'static str {
    match mode {
        TrainMode::Decoupled => "decoupled",
        TrainMode::EndToEnd => "end_to_end",
    }
}

/// One trained (or loaded) forecaster evaluated on a case's test days.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    pub best_epoch: Option<usize>,
    pub metrics: Metrics,
    pub cost: CostSummary,
}

/// Medians over the runs of one method.
#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub mape: f64,
    pub rmse: f64,
    pub r2: f64,
    pub mae_mean: f64,
    pub cost: CostSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub scale: f64,
    pub train_days: usize,
    pub val_days: usize,
    pub test_days: usize,
    pub oracle: CostSummary,
    pub runs: Vec<RunRecord>,
    pub methods: Vec<MethodSummary>,
    /// `100 (decoupled - end_to_end) / decoupled` on median total costs.
    pub reduction_pct: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    pub cases: Vec<CaseReport>,
}

impl CaseReport {
    pub fn method(&self, name: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == name)
    }
}

/// Median; the mean of the middle pair for an even count.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Percentage reduction of `new` relative to `base`.
pub fn reduction_pct(base: f64, new: f64) -> f64 {
    if base == 0.0 {
        0.0
    } else {
        100.0 * (base - new) / base.abs()
    }
}

fn summarize(method: &str, runs: &[&RunRecord]) -> MethodSummary {
    let med = |f: &dyn Fn(&RunRecord) -> f64| median(&runs.iter().map(|r| f(r)).collect::<Vec<_>>());
    MethodSummary {
        method: method.to_string(),
        mape: med(&|r| r.metrics.mape),
        rmse: med(&|r| r.metrics.rmse),
        r2: med(&|r| r.metrics.r2),
        mae_mean: med(&|r| r.metrics.mae_mean),
        cost: CostSummary {
            transactions: med(&|r| r.cost.transactions),
            penalty: med(&|r| r.cost.penalty),
            total: med(&|r| r.cost.total),
            deficiency_kwh: med(&|r| r.cost.deficiency_kwh),
        },
    }
}

/// Train/validation/test windows of `table` with demand scaled by `scale`.
pub fn case_split(cfg: &AppConfig, table: &DataTable, scale: f64) -> Result<crate::data::Split<Sample>, EvalError> {
    let mut t = table.clone();
    t.scale_demand(scale);
    let arch = &cfg.training.model;
    let s = split(&make_windows(&t, arch.history, arch.horizon));
    if s.train.is_empty() || s.test.is_empty() {
        return Err(EvalError::Config(format!(
            "table yields {} training and {} test days; need at least one of each",
            s.train.len(),
            s.test.len()
        )));
    }
    Ok(s)
}

fn scale_label(scale: f64) -> String {
    format!("{scale:.2}")
}

struct Job {
    method: String,
    seed: u64,
    model: ForecastModel,
    best_epoch: Option<usize>,
    log: Vec<EpochLog>,
}

fn evaluate_case(
    cfg: &AppConfig,
    scale: f64,
    data: &crate::data::Split<Sample>,
    jobs: Vec<Job>,
    out: Option<&Path>,
) -> Result<CaseReport, EvalError> {
    let ev = &cfg.evaluation;
    let opts = SolveOptions::with_tol(ev.qp_tol);
    let oracle = evaluate_oracle(&data.test, &cfg.ies, ev.qp_eps, &opts)?;
    let evals: Vec<Result<MethodEval, EvalError>> = jobs
        .par_iter()
        .map(|j| evaluate_forecaster(&j.model, &data.test, &cfg.ies, ev.qp_eps, &opts))
        .collect();

    let mut runs = Vec::with_capacity(jobs.len());
    let mut methods: Vec<String> = Vec::new();
    let label = scale_label(scale);
    for (j, e) in jobs.iter().zip(evals) {
        let e = e?;
        let first_of_method = !methods.contains(&j.method);
        if first_of_method {
            methods.push(j.method.clone());
        }
        if let Some(dir) = out {
            let stem = format!("scale_{label}_{}_seed_{}", j.method, j.seed);
            if !j.log.is_empty() {
                let logs = dir.join("logs");
                fs::create_dir_all(&logs)?;
                write_log_csv(&j.log, BufWriter::new(File::create(logs.join(format!("{stem}.csv")))?))?;
                let ckpt = dir.join("checkpoints");
                fs::create_dir_all(&ckpt)?;
                j.model.write_json(BufWriter::new(File::create(ckpt.join(format!("{stem}.json")))?))?;
            }
            if ev.write_schedules && first_of_method {
                write_schedules(&dir.join("schedules").join(format!("scale_{label}")).join(&j.method), &e)?;
            }
        }
        runs.push(RunRecord {
            method: j.method.clone(),
            seed: j.seed,
            best_epoch: j.best_epoch,
            metrics: e.metrics.expect("forecast evaluations carry metrics"),
            cost: e.cost,
        });
    }
    if let (Some(dir), true) = (out, ev.write_schedules) {
        write_schedules(&dir.join("schedules").join(format!("scale_{label}")).join(METHOD_ORACLE), &oracle)?;
    }

    let summaries: Vec<MethodSummary> = methods
        .iter()
        .map(|m| summarize(m, &runs.iter().filter(|r| &r.method == m).collect::<Vec<_>>()))
        .collect();
    let dec = summaries.iter().find(|m| m.method == method_name(TrainMode::Decoupled));
    let e2e = summaries.iter().find(|m| m.method == method_name(TrainMode::EndToEnd));
    let reduction = match (dec, e2e) {
        (Some(d), Some(e)) => Some(reduction_pct(d.cost.total, e.cost.total)),
        _ => None,
    };
    Ok(CaseReport {
        scale,
        train_days: data.train.len(),
        val_days: data.val.len(),
        test_days: data.test.len(),
        oracle: oracle.cost,
        runs,
        methods: summaries,
        reduction_pct: reduction,
    })
}

fn write_schedules(dir: &Path, e: &MethodEval) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    for (start, sched) in &e.schedules {
        let name = format!("{}.csv", start.format("%Y-%m-%d"));
        sched.write_csv(BufWriter::new(File::create(dir.join(name))?))?;
    }
    Ok(())
}

/// Trains one forecaster for `mode` and `seed` on a case.
pub fn train_run(
    cfg: &AppConfig,
    data: &crate::data::Split<Sample>,
    mode: TrainMode,
    seed: u64,
) -> Result<(ForecastModel, usize, Vec<EpochLog>), EvalError> {
    let norm = fit_normalizer(&data.train)?;
    let model = ForecastModel::init(cfg.training.model, norm, seed)?;
    let tc = TrainingConfig {
        seed,
        mode,
        ..cfg.training.clone()
    };
    let out = train(model, &data.train, &data.val, &cfg.ies, &tc)?;
    Ok((out.model, out.best_epoch, out.log))
}

/// For every demand scale: train Decoupled and EndToEnd forecasters for
/// every seed, evaluate them and the oracle on the test days, and report
/// medians over seeds. With `out`, writes `baselines.csv`, `metrics.json`,
/// training logs, checkpoints and schedules below it.
pub fn run_baselines(cfg: &AppConfig, table: &DataTable, out: Option<&Path>) -> Result<BaselineReport, EvalError> {
    let mut cases = Vec::with_capacity(cfg.evaluation.scales.len());
    for &scale in &cfg.evaluation.scales {
        let data = case_split(cfg, table, scale)?;
        let specs: Vec<(TrainMode, u64)> = cfg
            .evaluation
            .seeds
            .iter()
            .flat_map(|&s| [(TrainMode::Decoupled, s), (TrainMode::EndToEnd, s)])
            .collect();
        let trained: Vec<Result<Job, EvalError>> = specs
            .par_iter()
            .map(|&(mode, seed)| {
                let (model, best, log) = train_run(cfg, &data, mode, seed)?;
                Ok(Job {
                    method: method_name(mode).to_string(),
                    seed,
                    model,
                    best_epoch: Some(best),
                    log,
                })
            })
            .collect();
        let jobs = trained.into_iter().collect::<Result<Vec<_>, _>>()?;
        cases.push(evaluate_case(cfg, scale, &data, jobs, out)?);
    }
    let report = BaselineReport { cases };
    if let Some(dir) = out {
        write_report(&report, dir)?;
    }
    Ok(report)
}

/// Evaluates given forecasters (labelled) against the oracle on every case
/// without training.
pub fn evaluate_checkpoints(
    cfg: &AppConfig,
    table: &DataTable,
    models: &[(String, ForecastModel)],
    out: Option<&Path>,
) -> Result<BaselineReport, EvalError> {
    let mut cases = Vec::with_capacity(cfg.evaluation.scales.len());
    for &scale in &cfg.evaluation.scales {
        let data = case_split(cfg, table, scale)?;
        let jobs = models
            .iter()
            .map(|(name, m)| Job {
                method: name.clone(),
                seed: 0,
                model: m.clone(),
                best_epoch: None,
                log: Vec::new(),
            })
            .collect();
        cases.push(evaluate_case(cfg, scale, &data, jobs, out)?);
    }
    let report = BaselineReport { cases };
    if let Some(dir) = out {
        write_report(&report, dir)?;
    }
    Ok(report)
}

/// `baselines.csv` (one row per case and method, the oracle first) and
/// `metrics.json` (the full report).
pub fn write_report(report: &BaselineReport, dir: &Path) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("baselines.csv"))?));
    w.write_record([
        "scale",
        "method",
        "mape_pct",
        "rmse",
        "r2",
        "mae_mean_kw",
        "transaction_cost",
        "penalty",
        "total_cost",
        "deficiency_kwh",
        "reduction_pct",
    ])?;
    let dash = || "-".to_string();
    for c in &report.cases {
        let o = &c.oracle;
        w.write_record([
            c.scale.to_string(),
            METHOD_ORACLE.to_string(),
            dash(),
            dash(),
            dash(),
            dash(),
            o.transactions.to_string(),
            o.penalty.to_string(),
            o.total.to_string(),
            o.deficiency_kwh.to_string(),
            dash(),
        ])?;
        for m in &c.methods {
            let red = match (m.method == method_name(TrainMode::EndToEnd), c.reduction_pct) {
                (true, Some(r)) => r.to_string(),
                _ => dash(),
            };
            w.write_record([
                c.scale.to_string(),
                m.method.clone(),
                m.mape.to_string(),
                m.rmse.to_string(),
                m.r2.to_string(),
                m.mae_mean.to_string(),
                m.cost.transactions.to_string(),
                m.cost.penalty.to_string(),
                m.cost.total.to_string(),
                m.cost.deficiency_kwh.to_string(),
                red,
            ])?;
        }
    }
    w.flush()?;
    let mut f = BufWriter::new(File::create(dir.join("metrics.json"))?);
    serde_json::to_writer_pretty(&mut f, report)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}
