//! Column and row bookkeeping for the dispatch QP.
//!
//! Columns are grouped by variable: column `v * T + t` holds variable `v` at
//! step `t`. Each column is stored per-unit, `physical = scale * column`, with
//! the scale set to the variable's upper bound so that the quadratic
//! regularizer weighs every device alike.

use super::config::IesConfig;
use crate::qp::{ConstraintRef, RowNames};

/// Uncertain exogenous channels, in prediction-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    SolarRad,
    BldgElec,
    BldgHeat,
    BldgCool,
    DcElec,
    DcWasteHeat,
}

pub const N_CHANNELS: usize = 6;

impl Channel {
    pub const ALL: [Channel; N_CHANNELS] = [
        Channel::SolarRad,
        Channel::BldgElec,
        Channel::BldgHeat,
        Channel::BldgCool,
        Channel::DcElec,
        Channel::DcWasteHeat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::SolarRad => "solar_rad",
            Channel::BldgElec => "bldg_elec",
            Channel::BldgHeat => "bldg_heat",
            Channel::BldgCool => "bldg_cool",
            Channel::DcElec => "dc_elec",
            Channel::DcWasteHeat => "dc_waste_heat",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Index of channel `ch` at step `t` in the flattened prediction vector.
pub fn pred_index(t: usize, ch: Channel) -> usize {
    t * N_CHANNELS + ch.index()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    EssCh,
    EssDis,
    TesCh,
    TesDis,
    CesCh,
    CesDis,
    ElPower,
    FcH2,
    H2Buy,
    AcHeatIn,
    ChillerPower,
    GridBuy,
    GridSell,
    EssSoc,
    TesSoc,
    CesSoc,
    TankKg,
}

pub const N_DECISIONS: usize = 13;
pub const N_STATES: usize = 4;
pub const N_VAR_GROUPS: usize = N_DECISIONS + N_STATES;

impl Var {
    pub const ALL: [Var; N_VAR_GROUPS] = [
        Var::EssCh,
        Var::EssDis,
        Var::TesCh,
        Var::TesDis,
        Var::CesCh,
        Var::CesDis,
        Var::ElPower,
        Var::FcH2,
        Var::H2Buy,
        Var::AcHeatIn,
        Var::ChillerPower,
        Var::GridBuy,
        Var::GridSell,
        Var::EssSoc,
        Var::TesSoc,
        Var::CesSoc,
        Var::TankKg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Var::EssCh => "ess_ch",
            Var::EssDis => "ess_dis",
            Var::TesCh => "tes_ch",
            Var::TesDis => "tes_dis",
            Var::CesCh => "ces_ch",
            Var::CesDis => "ces_dis",
            Var::ElPower => "el_power",
            Var::FcH2 => "fc_h2",
            Var::H2Buy => "h2_buy",
            Var::AcHeatIn => "ac_heat_in",
            Var::ChillerPower => "chiller_power",
            Var::GridBuy => "grid_buy",
            Var::GridSell => "grid_sell",
            Var::EssSoc => "ess_soc",
            Var::TesSoc => "tes_soc",
            Var::CesSoc => "ces_soc",
            Var::TankKg => "tank_kg",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Physical `(lower, upper)` bounds; `None` means unbounded above.
    pub fn bounds(self, cfg: &IesConfig) -> (f64, Option<f64>) {
        let h = &cfg.hess;
        match self {
            Var::EssCh | Var::EssDis => (0.0, Some(cfg.ess.rate_max)),
            Var::TesCh | Var::TesDis => (0.0, Some(cfg.tes.rate_max)),
            Var::CesCh | Var::CesDis => (0.0, Some(cfg.ces.rate_max)),
            Var::ElPower => (0.0, Some(h.p_el_max)),
            // limited only through the tank
            Var::FcH2 => (0.0, None),
            Var::H2Buy => (0.0, Some(h.buy_max)),
            Var::AcHeatIn => (0.0, Some(cfg.ac.g_ac_max)),
            Var::ChillerPower => (0.0, Some(cfg.chiller.p_max)),
            Var::GridBuy | Var::GridSell => (0.0, Some(cfg.grid.p_max)),
            Var::EssSoc => (cfg.ess.s_min, Some(cfg.ess.s_max)),
            Var::TesSoc => (cfg.tes.s_min, Some(cfg.tes.s_max)),
            Var::CesSoc => (cfg.ces.s_min, Some(cfg.ces.s_max)),
            Var::TankKg => (0.0, Some(h.tank_max)),
        }
    }

    fn scale(self, cfg: &IesConfig) -> f64 {
        let ub = match self {
            Var::FcH2 => cfg.hess.tank_max / cfg.step_hours,
            v => v.bounds(cfg).1.unwrap_or(1.0),
        };
        if ub > 0.0 {
            ub
        } else {
            1.0
        }
    }
}

/// The three energy carriers balanced at every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Carrier {
    Elec,
    Heat,
    Cool,
}

impl Carrier {
    pub const ALL: [Carrier; 3] = [Carrier::Elec, Carrier::Heat, Carrier::Cool];

    pub fn name(self) -> &'static str {
        match self {
            Carrier::Elec => "elec",
            Carrier::Heat => "heat",
            Carrier::Cool => "cool",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Storage-like states in recurrence-row order.
pub const STATES: [Var; N_STATES] = [Var::EssSoc, Var::TesSoc, Var::CesSoc, Var::TankKg];

/// Maps between QP columns/rows and named device quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMap {
    pub horizon: usize,
    pub step_hours: f64,
    scales: [f64; N_VAR_GROUPS],
    /// Inequality rows per step (bounds), before terminal rows.
    bound_rows: Vec<(Var, Side)>,
    terminal_rows: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl IndexMap {
    pub fn new(cfg: &IesConfig) -> Self {
        let mut scales = [1.0; N_VAR_GROUPS];
        let mut bound_rows = Vec::new();
        for v in Var::ALL {
            scales[v.index()] = v.scale(cfg);
            bound_rows.push((v, Side::Lower));
            if v.bounds(cfg).1.is_some() {
                bound_rows.push((v, Side::Upper));
            }
        }
        Self {
            horizon: cfg.horizon_steps,
            step_hours: cfg.step_hours,
            scales,
            bound_rows,
            terminal_rows: cfg.terminal_state_policy == super::TerminalStatePolicy::ReturnToInitial,
        }
    }

    pub fn n_vars(&self) -> usize {
        N_VAR_GROUPS * self.horizon
    }

    pub fn n_pred(&self) -> usize {
        N_CHANNELS * self.horizon
    }

    pub fn n_eq(&self) -> usize {
        (N_STATES + Carrier::ALL.len()) * self.horizon
    }

    pub fn n_ineq(&self) -> usize {
        self.bound_rows.len() * self.horizon + if self.terminal_rows { N_STATES } else { 0 }
    }

    pub fn col(&self, v: Var, t: usize) -> usize {
        v.index() * self.horizon + t
    }

    /// Physical units per unit of the column.
    pub fn scale(&self, v: Var) -> f64 {
        self.scales[v.index()]
    }

    pub fn recurrence_row(&self, state: usize, t: usize) -> usize {
        state * self.horizon + t
    }

    pub fn balance_row(&self, c: Carrier, t: usize) -> usize {
        (N_STATES + c.index()) * self.horizon + t
    }

    pub(crate) fn bound_rows(&self) -> &[(Var, Side)] {
        &self.bound_rows
    }

    pub fn bound_row(&self, k: usize, t: usize) -> usize {
        t * self.bound_rows.len() + k
    }

    pub fn terminal_row(&self, state: usize) -> Option<usize> {
        self.terminal_rows
            .then(|| self.bound_rows.len() * self.horizon + state)
    }

    pub fn row_names(&self) -> RowNames {
        let t_max = self.horizon;
        let mut columns = Vec::with_capacity(self.n_vars());
        for v in Var::ALL {
            for t in 0..t_max {
                columns.push(format!("{}[{t}]", v.name()));
            }
        }
        let mut eq_rows = Vec::with_capacity(self.n_eq());
        for s in STATES {
            for t in 0..t_max {
                eq_rows.push(format!("{}_dynamics[{t}]", s.name()));
            }
        }
        for c in Carrier::ALL {
            for t in 0..t_max {
                eq_rows.push(format!("{}_balance[{t}]", c.name()));
            }
        }
        let mut ineq_rows = Vec::with_capacity(self.n_ineq());
        for t in 0..t_max {
            for (v, side) in &self.bound_rows {
                let op = match side {
                    Side::Lower => "min",
                    Side::Upper => "max",
                };
                ineq_rows.push(format!("{}[{t}] {op}", v.name()));
            }
        }
        if self.terminal_rows {
            for s in STATES {
                ineq_rows.push(format!("{}[{}] >= initial", s.name(), t_max - 1));
            }
        }
        RowNames {
            columns,
            eq_rows,
            ineq_rows,
        }
    }

    /// Human-readable name of a constraint row.
    pub fn describe(&self, c: ConstraintRef) -> String {
        let names = self.row_names();
        match c {
            ConstraintRef::Eq(i) => names.eq_rows.get(i).cloned(),
            ConstraintRef::Ineq(j) => names.ineq_rows.get(j).cloned(),
        }
        .unwrap_or_else(|| c.to_string())
    }
}
