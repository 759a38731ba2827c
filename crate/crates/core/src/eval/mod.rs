//! Prediction metrics, the Optimal/Decoupled/End-to-End comparison over
//! demand-scaling cases, and the waste heat recovery study.

mod baselines;
mod metrics;
mod run;
mod whr;

pub use baselines::{
    case_split, evaluate_checkpoints, median, method_name, reduction_pct, run_baselines, train_run,
    write_report, BaselineReport, CaseReport, MethodSummary, RunRecord, METHOD_ORACLE,
};
pub use metrics::{metrics, Metrics, MAPE_FLOOR};
pub use run::{
    eval_template, evaluate_forecaster, evaluate_oracle, forecast_scenario, prediction_vector, CostSummary,
    MethodEval,
};
pub use whr::{run_whr_study, write_whr_csv, WhrRow};

use crate::data::DataError;
use crate::forecast::ForecastError;
use crate::ies::IesError;
use crate::train::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Ies(#[from] IesError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
