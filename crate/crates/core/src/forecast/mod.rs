//! Multi-channel multi-step forecaster with exact reverse-mode gradients.

mod model;
mod tape;
mod window;

pub use model::{Architecture, ForecastModel, ModelKind, TapedPrediction, CHECKPOINT_TAG};
pub use tape::{NodeId, Tape};
pub use window::{calendar_features, calendar_matrix, FeatureWindow, Normalizer, N_CALENDAR};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ForecastError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("architecture: {0}")]
    Architecture(String),
    #[error("tape already consumed by a backward pass")]
    TapeConsumed,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
