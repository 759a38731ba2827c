use std::io::{Read, Write};

use nalgebra::DVector;

use super::config::IesConfig;
use super::layout::{Carrier, IndexMap, Var, N_VAR_GROUPS, STATES};
use super::scenario::ScenarioSeries;
use super::IesError;

/// Recurrence residual above which a decoded solution is rejected (kWh, kg).
pub const RECURRENCE_TOL: f64 = 1e-6;
/// Slightly negative values down to this are solver noise and clamped to 0.
pub const CLAMP_TOL: f64 = 1e-9;

/// Device set-points and state trajectories in physical units, one entry per
/// step. Powers are kW averaged over the step, `fc_h2`/`h2_buy` kg/h, states
/// end-of-step kWh (storage) or kg (tank).
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    values: [Vec<f64>; N_VAR_GROUPS],
}

impl Schedule {
    pub fn zeros(horizon: usize) -> Self {
        Self {
            values: std::array::from_fn(|_| vec![0.0; horizon]),
        }
    }

    pub fn horizon(&self) -> usize {
        self.values[0].len()
    }

    pub fn get(&self, v: Var) -> &[f64] {
        &self.values[v.index()]
    }

    pub fn get_mut(&mut self, v: Var) -> &mut [f64] {
        &mut self.values[v.index()]
    }

    pub fn ess_ch(&self) -> &[f64] {
        self.get(Var::EssCh)
    }
    pub fn ess_dis(&self) -> &[f64] {
        self.get(Var::EssDis)
    }
    pub fn grid_buy(&self) -> &[f64] {
        self.get(Var::GridBuy)
    }
    pub fn grid_sell(&self) -> &[f64] {
        self.get(Var::GridSell)
    }
    pub fn ess_soc(&self) -> &[f64] {
        self.get(Var::EssSoc)
    }
    pub fn tank_kg(&self) -> &[f64] {
        self.get(Var::TankKg)
    }

    /// Reads a primal vector. Recurrences are checked on the raw values,
    /// then negatives within [`CLAMP_TOL`] of zero are clamped.
    pub fn decode(index: &IndexMap, cfg: &IesConfig, x: &DVector<f64>) -> Result<Self, IesError> {
        if x.len() != index.n_vars() {
            return Err(IesError::Dimension(format!(
                "primal has length {}, expected {}",
                x.len(),
                index.n_vars()
            )));
        }
        let mut out = Self::zeros(index.horizon);
        for v in Var::ALL {
            let s = index.scale(v);
            for t in 0..index.horizon {
                out.values[v.index()][t] = s * x[index.col(v, t)];
            }
        }
        let worst = out.recurrence_residuals(cfg);
        if let Some((name, t, r)) = worst.into_iter().find(|(_, _, r)| *r > RECURRENCE_TOL) {
            return Err(IesError::InconsistentSolution(format!(
                "{name} recurrence residual {r:e} at step {t}"
            )));
        }
        for vals in out.values.iter_mut() {
            for v in vals.iter_mut() {
                if *v < 0.0 && *v >= -CLAMP_TOL {
                    *v = 0.0;
                }
            }
        }
        Ok(out)
    }

    /// Inverse of [`Schedule::decode`] (without the clamp).
    pub fn encode(&self, index: &IndexMap) -> DVector<f64> {
        let mut x = DVector::zeros(index.n_vars());
        for v in Var::ALL {
            let s = index.scale(v);
            for t in 0..index.horizon {
                x[index.col(v, t)] = self.values[v.index()][t] / s;
            }
        }
        x
    }

    /// Largest absolute recurrence residual per state: `(name, step, value)`.
    pub fn recurrence_residuals(&self, cfg: &IesConfig) -> Vec<(&'static str, usize, f64)> {
        let dt = cfg.step_hours;
        let h = &cfg.hess;
        STATES
            .iter()
            .map(|&state| {
                let mut worst = (state.name(), 0, 0.0);
                for t in 0..self.horizon() {
                    let prev = if t == 0 {
                        initial_state(cfg, state)
                    } else {
                        self.get(state)[t - 1]
                    };
                    let delta = match state {
                        Var::TankKg => {
                            h.production_per_kw() * dt * self.get(Var::ElPower)[t]
                                - dt * self.get(Var::FcH2)[t]
                                + dt * self.get(Var::H2Buy)[t]
                        }
                        _ => {
                            let (ch, dis, st) = storage_parts(cfg, state);
                            st.eta_ch * dt * self.get(ch)[t] - dt / st.eta_dis * self.get(dis)[t]
                        }
                    };
                    let r = (self.get(state)[t] - prev - delta).abs();
                    if r > worst.2 {
                        worst = (state.name(), t, r);
                    }
                }
                worst
            })
            .collect()
    }

    /// Per-step supply minus demand for each carrier under `scenario`.
    /// Positive entries are surplus, negative entries shortfall.
    pub fn net_supply(&self, cfg: &IesConfig, scenario: &ScenarioSeries) -> [Vec<f64>; 3] {
        let h = &cfg.hess;
        let g = |v: Var, t: usize| self.get(v)[t];
        let dc_cool = scenario.dc_cool(cfg.dc.pue);
        std::array::from_fn(|c| {
            (0..self.horizon())
                .map(|t| match Carrier::ALL[c] {
                    Carrier::Elec => {
                        g(Var::GridBuy, t) - g(Var::GridSell, t)
                            + h.k_fc * g(Var::FcH2, t)
                            + g(Var::EssDis, t)
                            - g(Var::EssCh, t)
                            - g(Var::ElPower, t)
                            - g(Var::ChillerPower, t)
                            + cfg.pv_gain() * scenario.solar_rad[t]
                            - scenario.bldg_elec[t]
                            - scenario.dc_elec[t]
                    }
                    Carrier::Heat => {
                        h.heat_per_kg() * g(Var::FcH2, t) + g(Var::TesDis, t)
                            - g(Var::TesCh, t)
                            - g(Var::AcHeatIn, t)
                            + cfg.stc_gain() * scenario.solar_rad[t]
                            + cfg.hp.eta_hp * scenario.dc_waste_heat[t]
                            - scenario.bldg_heat[t]
                    }
                    Carrier::Cool => {
                        cfg.ac.eta_ac * g(Var::AcHeatIn, t)
                            + cfg.chiller.cop * g(Var::ChillerPower, t)
                            + g(Var::CesDis, t)
                            - g(Var::CesCh, t)
                            - scenario.bldg_cool[t]
                            - dc_cool[t]
                    }
                })
                .collect()
        })
    }

    /// Largest violation of any device or state bound (0 when all hold).
    pub fn bound_violation(&self, cfg: &IesConfig) -> f64 {
        let mut worst: f64 = 0.0;
        for v in Var::ALL {
            let (lo, hi) = v.bounds(cfg);
            for &x in self.get(v) {
                worst = worst.max(lo - x);
                if let Some(hi) = hi {
                    worst = worst.max(x - hi);
                }
            }
        }
        worst
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), IesError> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["step".to_string()];
        header.extend(Var::ALL.iter().map(|v| v.name().to_string()));
        wtr.write_record(&header)?;
        for t in 0..self.horizon() {
            let mut rec = vec![t.to_string()];
            rec.extend(Var::ALL.iter().map(|v| self.get(*v)[t].to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, IesError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        let cols: Vec<usize> = Var::ALL
            .iter()
            .map(|v| {
                header
                    .iter()
                    .position(|h| h == v.name())
                    .ok_or_else(|| IesError::Dimension(format!("schedule csv lacks column {}", v.name())))
            })
            .collect::<Result<_, _>>()?;
        let mut values: [Vec<f64>; N_VAR_GROUPS] = std::array::from_fn(|_| Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            for (k, &c) in cols.iter().enumerate() {
                let field = rec.get(c).unwrap_or("");
                let v = field
                    .parse::<f64>()
                    .map_err(|e| IesError::Dimension(format!("bad value {field:?}: {e}")))?;
                values[k].push(v);
            }
        }
        Ok(Self { values })
    }
}

pub(crate) fn initial_state(cfg: &IesConfig, state: Var) -> f64 {
    match state {
        Var::EssSoc => cfg.ess.initial(),
        Var::TesSoc => cfg.tes.initial(),
        Var::CesSoc => cfg.ces.initial(),
        Var::TankKg => cfg.hess.initial_tank(),
        _ => unreachable!("{state:?} is not a state"),
    }
}

/// Charge variable, discharge variable and parameters of a storage state.
pub(crate) fn storage_parts(cfg: &IesConfig, state: Var) -> (Var, Var, &super::StorageConfig) {
    match state {
        Var::EssSoc => (Var::EssCh, Var::EssDis, &cfg.ess),
        Var::TesSoc => (Var::TesCh, Var::TesDis, &cfg.tes),
        Var::CesSoc => (Var::CesCh, Var::CesDis, &cfg.ces),
        _ => unreachable!("{state:?} is not a heat/cold/electric storage"),
    }
}

/// Transaction cost `sum_t (buy_t*grid_buy - sell_t*grid_sell + h2_t*h2_buy) * dt`.
pub fn operating_cost(schedule: &Schedule, scenario: &ScenarioSeries, step_hours: f64) -> f64 {
    (0..schedule.horizon())
        .map(|t| {
            (scenario.price_buy[t] * schedule.grid_buy()[t]
                - scenario.price_sell[t] * schedule.grid_sell()[t]
                + scenario.price_h2[t] * schedule.get(Var::H2Buy)[t])
                * step_hours
        })
        .sum()
}
