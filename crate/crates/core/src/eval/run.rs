use chrono::NaiveDateTime;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{metrics, EvalError, Metrics};
use crate::data::Sample;
use crate::forecast::ForecastModel;
use crate::ies::{build_qp, ex_post_evaluate, pred_index, Channel, ExPostResult, IesConfig, IesQp, Schedule, ScenarioSeries};
use crate::qp::SolveOptions;

/// Ex-post costs summed over a set of days.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub transactions: f64,
    pub penalty: f64,
    pub total: f64,
    /// Unmet demand over all carriers, kWh.
    pub deficiency_kwh: f64,
}

impl CostSummary {
    fn add(&mut self, r: &ExPostResult, step_hours: f64) {
        self.transactions += r.cost_transactions;
        self.penalty += r.penalty;
        self.total += r.total_cost;
        self.deficiency_kwh += r.total_deficiency_kwh(step_hours);
    }
}

/// Evaluation of one method on a set of days.
#[derive(Debug, Clone)]
pub struct MethodEval {
    /// `None` for the perfect-information oracle.
    pub metrics: Option<Metrics>,
    pub cost: CostSummary,
    pub per_day: Vec<ExPostResult>,
    pub schedules: Vec<(NaiveDateTime, Schedule)>,
}

/// Physical prediction vector of a normalized forecast, clamped at zero.
pub fn prediction_vector(model: &ForecastModel, pred: &DMatrix<f64>) -> DVector<f64> {
    let phys = model.normalizer.denormalize_clamped(pred);
    let mut y = DVector::zeros(phys.len());
    for t in 0..phys.nrows() {
        for ch in Channel::ALL {
            y[pred_index(t, ch)] = phys[(t, ch.index())];
        }
    }
    y
}

/// The model's day-ahead scenario for `sample`: predicted channels, actual prices.
pub fn forecast_scenario(model: &ForecastModel, sample: &Sample) -> Result<ScenarioSeries, EvalError> {
    let pred = model.predict(&sample.window(&model.normalizer))?;
    Ok(sample.actual.with_prediction(&prediction_vector(model, &pred))?)
}

/// Regularized dispatch template for days like `sample`.
pub fn eval_template(ies: &IesConfig, sample: &Sample, eps: f64) -> Result<IesQp, EvalError> {
    Ok(build_qp(ies, &sample.actual)?.regularized(eps))
}

fn assemble(
    ies: &IesConfig,
    samples: &[Sample],
    metrics: Option<Metrics>,
    days: Vec<(Schedule, ExPostResult)>,
) -> MethodEval {
    let mut cost = CostSummary::default();
    let mut per_day = Vec::with_capacity(days.len());
    let mut schedules = Vec::with_capacity(days.len());
    for (s, (sched, r)) in samples.iter().zip(days) {
        cost.add(&r, ies.step_hours);
        per_day.push(r);
        schedules.push((s.start, sched));
    }
    MethodEval {
        metrics,
        cost,
        per_day,
        schedules,
    }
}

/// Predict, dispatch on the prediction, and settle against the actual day.
pub fn evaluate_forecaster(
    model: &ForecastModel,
    samples: &[Sample],
    ies: &IesConfig,
    eps: f64,
    opts: &SolveOptions,
) -> Result<MethodEval, EvalError> {
    let Some(first) = samples.first() else {
        return Err(EvalError::Config("no samples to evaluate".into()));
    };
    let qp = eval_template(ies, first, eps)?;
    let days: Vec<Result<(DMatrix<f64>, Schedule, ExPostResult), EvalError>> = samples
        .par_iter()
        .map(|s| {
            let pred = model.predict(&s.window(&model.normalizer))?;
            let scenario = s.actual.with_prediction(&prediction_vector(model, &pred))?;
            let d = qp.dispatch(&scenario, opts)?;
            let r = ex_post_evaluate(ies, &d.schedule, &s.actual)?;
            Ok((pred, d.schedule, r))
        })
        .collect();
    let mut preds = Vec::with_capacity(samples.len());
    let mut settled = Vec::with_capacity(samples.len());
    for d in days {
        let (p, sched, r) = d?;
        preds.push(p);
        settled.push((sched, r));
    }
    let truths: Vec<DMatrix<f64>> = samples.iter().map(|s| model.normalizer.normalize(&s.target())).collect();
    let m = metrics(&preds, &truths, &model.normalizer);
    Ok(assemble(ies, samples, Some(m), settled))
}

/// Perfect-information dispatch of every day.
pub fn evaluate_oracle(
    samples: &[Sample],
    ies: &IesConfig,
    eps: f64,
    opts: &SolveOptions,
) -> Result<MethodEval, EvalError> {
    let Some(first) = samples.first() else {
        return Err(EvalError::Config("no samples to evaluate".into()));
    };
    let qp = eval_template(ies, first, eps)?;
    let days: Vec<Result<(Schedule, ExPostResult), EvalError>> = samples
        .par_iter()
        .map(|s| {
            let d = qp.dispatch(&s.actual, opts)?;
            let r = ex_post_evaluate(ies, &d.schedule, &s.actual)?;
            Ok((d.schedule, r))
        })
        .collect();
    let days = days.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(ies, samples, None, days))
}
