use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{eval_template, forecast_scenario, reduction_pct, EvalError};
use crate::data::Sample;
use crate::forecast::ForecastModel;
use crate::ies::{ex_post_evaluate, IesConfig, ScenarioSeries};
use crate::qp::SolveOptions;

/// Costs at one data center workload, summed over the study days.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WhrRow {
    /// fraction of full load
    pub workload: f64,
    pub oracle_cost_without_whr: f64,
    pub oracle_cost_with_whr: f64,
    pub oracle_reduction_pct: f64,
    pub forecast_cost_without_whr: Option<f64>,
    pub forecast_cost_with_whr: Option<f64>,
    pub forecast_reduction_pct: Option<f64>,
}

/// Ex-post total cost of dispatching on `planned` and settling on `actual`.
fn settle(ies: &IesConfig, sample: &Sample, planned: &ScenarioSeries, actual: &ScenarioSeries, eps: f64, opts: &SolveOptions) -> Result<f64, EvalError> {
    let qp = eval_template(ies, sample, eps)?;
    let d = qp.dispatch(planned, opts)?;
    Ok(ex_post_evaluate(ies, &d.schedule, actual)?.total_cost)
}

/// Scales the data center channels of every day by each workload and
/// compares the cost with waste heat recovery as configured against the
/// cost with the heat pump disabled. With a model, the same comparison is
/// made for schedules dispatched on its forecasts (the DC part of the
/// forecast scaled by the same workload).
pub fn run_whr_study(
    ies: &IesConfig,
    samples: &[Sample],
    workloads: &[f64],
    model: Option<&ForecastModel>,
    eps: f64,
    opts: &SolveOptions,
) -> Result<Vec<WhrRow>, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::Config("no days for the waste heat study".into()));
    }
    let mut without = ies.clone();
    without.hp.eta_hp = 0.0;
    let forecasts: Option<Vec<ScenarioSeries>> = match model {
        Some(m) => Some(samples.iter().map(|s| forecast_scenario(m, s)).collect::<Result<_, _>>()?),
        None => None,
    };

    workloads
        .par_iter()
        .map(|&w| {
            let mut sums = [0.0; 4];
            for (i, s) in samples.iter().enumerate() {
                let mut actual = s.actual.clone();
                actual.scale_dc(w);
                sums[0] += settle(&without, s, &actual, &actual, eps, opts)?;
                sums[1] += settle(ies, s, &actual, &actual, eps, opts)?;
                if let Some(f) = &forecasts {
                    let mut planned = f[i].clone();
                    planned.scale_dc(w);
                    sums[2] += settle(&without, s, &planned, &actual, eps, opts)?;
                    sums[3] += settle(ies, s, &planned, &actual, eps, opts)?;
                }
            }
            let fc = forecasts.is_some();
            Ok(WhrRow {
                workload: w,
                oracle_cost_without_whr: sums[0],
                oracle_cost_with_whr: sums[1],
                oracle_reduction_pct: reduction_pct(sums[0], sums[1]),
                forecast_cost_without_whr: fc.then_some(sums[2]),
                forecast_cost_with_whr: fc.then_some(sums[3]),
                forecast_reduction_pct: fc.then(|| reduction_pct(sums[2], sums[3])),
            })
        })
        .collect()
}

/// Writes `whr_study.csv` into `dir`.
pub fn write_whr_csv(rows: &[WhrRow], dir: &Path) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("whr_study.csv"))?));
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
