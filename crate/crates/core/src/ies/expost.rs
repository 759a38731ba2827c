use serde::{Deserialize, Serialize};

use super::build::build_qp;
use super::config::IesConfig;
use super::layout::Carrier;
use super::scenario::ScenarioSeries;
use super::schedule::{operating_cost, Schedule};
use super::IesError;
use crate::qp::SolveOptions;

/// Shortfalls below this (kW) are solver noise, not deficiency.
pub const DEFICIT_TOL: f64 = 1e-6;

/// Realized cost of a fixed schedule once the actual conditions are known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExPostResult {
    pub cost_transactions: f64,
    /// `deficiency_kw[carrier][t]`, carriers ordered elec, heat, cool.
    pub deficiency_kw: [Vec<f64>; 3],
    pub penalty: f64,
    pub total_cost: f64,
    /// Per-carrier surplus energy thrown away (kWh).
    pub surplus_discarded_kwh: [f64; 3],
}

impl ExPostResult {
    pub fn total_deficiency_kwh(&self, step_hours: f64) -> f64 {
        self.deficiency_kw.iter().flatten().sum::<f64>() * step_hours
    }
}

/// Holds every device decision and grid trade of `schedule` fixed and
/// re-evaluates the balances under `actual`. Unmet demand of any carrier is
/// charged at the electricity purchase price; surplus is discarded.
pub fn ex_post_evaluate(cfg: &IesConfig, schedule: &Schedule, actual: &ScenarioSeries) -> Result<ExPostResult, IesError> {
    actual.validate(schedule.horizon())?;
    let dt = cfg.step_hours;
    let net = schedule.net_supply(cfg, actual);
    let mut deficiency_kw: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; schedule.horizon()]);
    let mut surplus_discarded_kwh = [0.0; 3];
    let mut penalty = 0.0;
    for c in Carrier::ALL {
        for (t, &v) in net[c.index()].iter().enumerate() {
            if v < -DEFICIT_TOL {
                deficiency_kw[c.index()][t] = -v;
                penalty += actual.price_buy[t] * -v * dt;
            } else if v > 0.0 {
                surplus_discarded_kwh[c.index()] += v * dt;
            }
        }
    }
    let cost_transactions = operating_cost(schedule, actual, dt);
    Ok(ExPostResult {
        cost_transactions,
        deficiency_kw,
        penalty,
        total_cost: cost_transactions + penalty,
        surplus_discarded_kwh,
    })
}

/// The perfect-information schedule: the regularized dispatch solved on the
/// actual scenario, with its ex-post total cost.
pub fn oracle_solve(
    cfg: &IesConfig,
    actual: &ScenarioSeries,
    eps: f64,
    opts: &SolveOptions,
) -> Result<(Schedule, ExPostResult), IesError> {
    let model = build_qp(cfg, actual)?.regularized(eps);
    let d = model.dispatch(actual, opts)?;
    let r = ex_post_evaluate(cfg, &d.schedule, actual)?;
    Ok((d.schedule, r))
}
