use nalgebra::{DMatrix, DVector};

use super::config::{IesConfig, TerminalStatePolicy};
use super::layout::{pred_index, Carrier, Channel, IndexMap, Side, Var, STATES};
use super::scenario::ScenarioSeries;
use super::schedule::{initial_state, storage_parts, Schedule};
use super::IesError;
use crate::qp::{self, ParamQP, PrimalDualSolution, QpData, QpError, SolveOptions};

/// The dispatch QP for one configuration together with its index map.
///
/// Only the linear cost depends on the scenario (through prices); the six
/// uncertain channels enter as the prediction vector, so one instance serves
/// every sample via [`IesQp::priced`].
#[derive(Debug, Clone)]
pub struct IesQp {
    pub qp: ParamQP,
    pub index: IndexMap,
    pub cfg: IesConfig,
}

/// Assembles the dispatch problem. The result is a linear program; apply
/// [`IesQp::regularized`] before solving or differentiating.
pub fn build_qp(cfg: &IesConfig, scenario: &ScenarioSeries) -> Result<IesQp, IesError> {
    cfg.validate()?;
    scenario.validate(cfg.horizon_steps)?;
    let index = IndexMap::new(cfg);
    let (n, k) = (index.n_vars(), index.n_pred());
    let horizon = index.horizon;
    let dt = cfg.step_hours;
    let h = &cfg.hess;

    let m = index.n_eq();
    let mut a = DMatrix::zeros(m, n);
    let mut b0 = DVector::zeros(m);
    let mut bs = DMatrix::zeros(m, k);
    let put = |a: &mut DMatrix<f64>, row: usize, v: Var, t: usize, coef: f64| {
        a[(row, index.col(v, t))] += coef * index.scale(v);
    };

    for (si, &state) in STATES.iter().enumerate() {
        for t in 0..horizon {
            let row = index.recurrence_row(si, t);
            put(&mut a, row, state, t, 1.0);
            if t > 0 {
                put(&mut a, row, state, t - 1, -1.0);
            } else {
                b0[row] = initial_state(cfg, state);
            }
            match state {
                Var::TankKg => {
                    put(&mut a, row, Var::ElPower, t, -h.production_per_kw() * dt);
                    put(&mut a, row, Var::FcH2, t, dt);
                    put(&mut a, row, Var::H2Buy, t, -dt);
                }
                _ => {
                    let (ch, dis, st) = storage_parts(cfg, state);
                    put(&mut a, row, ch, t, -st.eta_ch * dt);
                    put(&mut a, row, dis, t, dt / st.eta_dis);
                }
            }
        }
    }

    for t in 0..horizon {
        let row = index.balance_row(Carrier::Elec, t);
        put(&mut a, row, Var::GridBuy, t, 1.0);
        put(&mut a, row, Var::GridSell, t, -1.0);
        put(&mut a, row, Var::FcH2, t, h.k_fc);
        put(&mut a, row, Var::EssDis, t, 1.0);
        put(&mut a, row, Var::EssCh, t, -1.0);
        put(&mut a, row, Var::ElPower, t, -1.0);
        put(&mut a, row, Var::ChillerPower, t, -1.0);
        bs[(row, pred_index(t, Channel::BldgElec))] = 1.0;
        bs[(row, pred_index(t, Channel::DcElec))] = 1.0;
        bs[(row, pred_index(t, Channel::SolarRad))] = -cfg.pv_gain();

        let row = index.balance_row(Carrier::Heat, t);
        put(&mut a, row, Var::FcH2, t, h.heat_per_kg());
        put(&mut a, row, Var::TesDis, t, 1.0);
        put(&mut a, row, Var::TesCh, t, -1.0);
        put(&mut a, row, Var::AcHeatIn, t, -1.0);
        bs[(row, pred_index(t, Channel::BldgHeat))] = 1.0;
        bs[(row, pred_index(t, Channel::SolarRad))] = -cfg.stc_gain();
        bs[(row, pred_index(t, Channel::DcWasteHeat))] = -cfg.hp.eta_hp;

        let row = index.balance_row(Carrier::Cool, t);
        put(&mut a, row, Var::AcHeatIn, t, cfg.ac.eta_ac);
        put(&mut a, row, Var::ChillerPower, t, cfg.chiller.cop);
        put(&mut a, row, Var::CesDis, t, 1.0);
        put(&mut a, row, Var::CesCh, t, -1.0);
        bs[(row, pred_index(t, Channel::BldgCool))] = 1.0;
        bs[(row, pred_index(t, Channel::DcElec))] = cfg.dc_cooling_ratio();
    }

    // bounds in per-unit form: -x <= -lo/scale, x <= hi/scale
    let p = index.n_ineq();
    let mut g = DMatrix::zeros(p, n);
    let mut h0 = DVector::zeros(p);
    for t in 0..horizon {
        for (kk, &(v, side)) in index.bound_rows().iter().enumerate() {
            let row = index.bound_row(kk, t);
            let (lo, hi) = v.bounds(cfg);
            let s = index.scale(v);
            match side {
                Side::Lower => {
                    g[(row, index.col(v, t))] = -1.0;
                    h0[row] = -lo / s;
                }
                Side::Upper => {
                    g[(row, index.col(v, t))] = 1.0;
                    h0[row] = hi.unwrap_or(f64::INFINITY) / s;
                }
            }
        }
    }
    if cfg.terminal_state_policy == TerminalStatePolicy::ReturnToInitial {
        for (si, &state) in STATES.iter().enumerate() {
            let row = index.terminal_row(si).expect("terminal rows enabled");
            g[(row, index.col(state, horizon - 1))] = -1.0;
            h0[row] = -initial_state(cfg, state) / index.scale(state);
        }
    }

    let mut data = QpData::zeros(n, k)
        .with_eq(a, b0, bs)
        .with_ineq(g, h0, DMatrix::zeros(p, k));
    data.lin_cost = lin_cost(&index, scenario);
    Ok(IesQp {
        qp: data.into_qp()?,
        index,
        cfg: cfg.clone(),
    })
}

/// Per-unit linear cost for the prices of `scenario`.
pub fn lin_cost(index: &IndexMap, scenario: &ScenarioSeries) -> DVector<f64> {
    let dt = index.step_hours;
    let mut c = DVector::zeros(index.n_vars());
    for t in 0..index.horizon {
        c[index.col(Var::GridBuy, t)] = scenario.price_buy[t] * dt * index.scale(Var::GridBuy);
        c[index.col(Var::GridSell, t)] = -scenario.price_sell[t] * dt * index.scale(Var::GridSell);
        c[index.col(Var::H2Buy, t)] = scenario.price_h2[t] * dt * index.scale(Var::H2Buy);
    }
    c
}

/// A solved dispatch: the schedule plus the raw primal-dual point.
#[derive(Debug, Clone)]
pub struct Dispatch {
    pub schedule: Schedule,
    pub solution: PrimalDualSolution,
}

impl IesQp {
    /// Copy with `eps * I` added to the (per-unit) quadratic cost.
    pub fn regularized(&self, eps: f64) -> IesQp {
        IesQp {
            qp: self.qp.regularize(eps),
            index: self.index.clone(),
            cfg: self.cfg.clone(),
        }
    }

    /// The QP with its linear cost set to the prices of `scenario`. Shares
    /// the cached constraint factorization with `self`.
    pub fn priced(&self, scenario: &ScenarioSeries) -> Result<ParamQP, IesError> {
        scenario.validate(self.index.horizon)?;
        let mut qp = self.qp.clone();
        qp.set_lin_cost(lin_cost(&self.index, scenario))?;
        Ok(qp)
    }

    /// Solves against the channels and prices of `scenario`.
    pub fn dispatch(&self, scenario: &ScenarioSeries, opts: &SolveOptions) -> Result<Dispatch, IesError> {
        let qp = self.priced(scenario)?;
        let y = scenario.prediction_vector();
        let solution = qp::solve(&qp, &y, opts).map_err(|e| self.name_error(e))?;
        let schedule = Schedule::decode(&self.index, &self.cfg, &solution.primal)?;
        Ok(Dispatch { schedule, solution })
    }

    /// Attaches the row name to an infeasibility report.
    pub fn name_error(&self, e: QpError) -> IesError {
        match e {
            QpError::Infeasible {
                residual,
                constraint: Some(c),
            } => IesError::Infeasible {
                constraint: self.index.describe(c),
                residual,
            },
            other => IesError::Qp(other),
        }
    }
}
