//! Decoupled and end-to-end training of the forecaster: the composite
//! error/cost loss, its weight schedule, Adam, and the batch loop that pushes
//! cost gradients back through the dispatch QP.

mod adam;
mod loss;
mod trainer;

use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamState};
pub use loss::{combined_loss, loss_cost, loss_error, weight_schedule, CostEval, SampleError, SampleEval, SampleLoss};
pub use trainer::{mean_oracle_cost, template_qp, train, write_log_csv, EpochLog, TrainOutcome};

use crate::data::DataError;
use crate::forecast::{Architecture, ForecastError};
use crate::ies::IesError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Accuracy only: the cost weight is held at zero.
    Decoupled,
    /// Error plus operating cost, with gradients through the QP.
    #[serde(alias = "e2e")]
    EndToEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub beta_start: f64,
    pub beta_end: f64,
    /// Regularization added to the dispatch QP during training.
    pub qp_eps: f64,
    /// Solver tolerance during training.
    pub qp_tol: f64,
    /// Divides the operating cost before weighting. `None` uses the mean
    /// absolute oracle cost per step of the training split.
    pub cost_scale: Option<f64>,
    /// Largest tolerated fraction of samples whose QP failed.
    pub max_skip_fraction: f64,
    pub seed: u64,
    pub mode: TrainMode,
    /// Forecaster trained by this configuration.
    pub model: Architecture,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            epochs: 100,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            alpha_start: 1.0,
            alpha_end: 0.6,
            beta_start: 0.0,
            beta_end: 0.4,
            qp_eps: crate::qp::DEFAULT_EPS,
            qp_tol: 1e-6,
            cost_scale: None,
            max_skip_fraction: 0.01,
            seed: 0,
            mode: TrainMode::EndToEnd,
            model: Architecture::default(),
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        for (name, w) in [
            ("alpha_start", self.alpha_start),
            ("alpha_end", self.alpha_end),
            ("beta_start", self.beta_start),
            ("beta_end", self.beta_end),
        ] {
            if !(0.0..=1.0).contains(&w) {
                return Err(TrainError::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if (self.alpha_start + self.beta_start - 1.0).abs() > 1e-12
            || (self.alpha_end + self.beta_end - 1.0).abs() > 1e-12
        {
            return bad("alpha and beta must sum to 1 at both schedule ends");
        }
        if !(self.qp_eps > 0.0 && self.qp_tol > 0.0) {
            return bad("qp_eps and qp_tol must be positive");
        }
        if let Some(k) = self.cost_scale {
            if !(k > 0.0 && k.is_finite()) {
                return bad("cost_scale must be positive");
            }
        }
        if !(0.0..=1.0).contains(&self.max_skip_fraction) {
            return bad("max_skip_fraction must lie in [0, 1]");
        }
        self.model.validate()?;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("config: {0}")]
    Config(String),
    #[error("{skipped} of {total} samples failed to solve (limit {limit:.1}%); last: {last}")]
    TooManySkips {
        skipped: usize,
        total: usize,
        limit: f64,
        last: String,
    },
    #[error("non-finite loss at epoch {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Ies(#[from] IesError),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
