//! Dispatch model of the hydrogen-based integrated energy system.
//!
//! Electricity, heat and cooling are balanced every step. Storage (battery,
//! hot and chilled water, hydrogen tank) carries energy across steps; the
//! electrolyzer/fuel-cell chain converts electricity to hydrogen and back,
//! with fuel-cell heat recovered. Radiation, building loads and the data
//! center's power draw and waste heat are the uncertain inputs.

mod build;
mod config;
mod expost;
mod layout;
mod scenario;
mod schedule;

pub use build::{build_qp, lin_cost, Dispatch, IesQp};
pub use config::{
    AbsorptionChillerConfig, ChillerConfig, DataCenterConfig, GridConfig, HeatPumpConfig,
    HessConfig, IesConfig, SolarConfig, StorageConfig, TerminalStatePolicy,
};
pub use expost::{ex_post_evaluate, oracle_solve, ExPostResult, DEFICIT_TOL};
pub use layout::{pred_index, Carrier, Channel, IndexMap, Var, N_CHANNELS, N_DECISIONS, N_STATES, STATES};
pub use scenario::ScenarioSeries;
pub use schedule::{operating_cost, Schedule, CLAMP_TOL, RECURRENCE_TOL};

use crate::qp::QpError;

#[derive(Debug, thiserror::Error)]
pub enum IesError {
    #[error("config: {0}")]
    Config(String),
    #[error("dimension: {0}")]
    Dimension(String),
    #[error("infeasible: {constraint} cannot be satisfied (primal residual {residual:e})")]
    Infeasible { constraint: String, residual: f64 },
    #[error("inconsistent solution: {0}")]
    InconsistentSolution(String),
    #[error(transparent)]
    Qp(#[from] QpError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
