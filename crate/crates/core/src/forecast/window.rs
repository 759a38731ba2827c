use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ForecastError;

/// Calendar features per target step: weekend flag, hour sin/cos, month sin/cos.
pub const N_CALENDAR: usize = 5;

/// One supervised example: normalized history of every channel, calendar
/// features of the target day and, for training, the normalized target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow {
    /// `history x channels`
    pub history: DMatrix<f64>,
    /// `horizon x N_CALENDAR`
    pub calendar: DMatrix<f64>,
    /// `horizon x channels`
    pub target: Option<DMatrix<f64>>,
}

pub fn calendar_features(ts: NaiveDateTime) -> [f64; N_CALENDAR] {
    use std::f64::consts::TAU;
    let weekend = matches!(ts.weekday(), Weekday::Sat | Weekday::Sun);
    let hour = ts.hour() as f64 / 24.0;
    let month = ts.month0() as f64 / 12.0;
    [
        if weekend { 1.0 } else { 0.0 },
        (TAU * hour).sin(),
        (TAU * hour).cos(),
        (TAU * month).sin(),
        (TAU * month).cos(),
    ]
}

/// Stacks the calendar features of consecutive timestamps.
pub fn calendar_matrix(stamps: &[NaiveDateTime]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(stamps.len(), N_CALENDAR);
    for (r, ts) in stamps.iter().enumerate() {
        for (c, v) in calendar_features(*ts).into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    m
}

/// Per-channel min-max scaling fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: Vec<f64>,
    /// `max - min`, or 1 for a constant channel
    pub scale: Vec<f64>,
}

impl Normalizer {
    pub fn identity(channels: usize) -> Self {
        Self {
            min: vec![0.0; channels],
            scale: vec![1.0; channels],
        }
    }

    /// Fits on the rows of `data` (`samples x channels`).
    pub fn fit(data: &DMatrix<f64>) -> Result<Self, ForecastError> {
        if data.nrows() == 0 {
            return Err(ForecastError::ShapeMismatch("cannot fit a normalizer on no rows".into()));
        }
        let mut min = Vec::with_capacity(data.ncols());
        let mut scale = Vec::with_capacity(data.ncols());
        for col in data.column_iter() {
            let (lo, hi) = (col.min(), col.max());
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(ForecastError::ShapeMismatch("non-finite training data".into()));
            }
            min.push(lo);
            scale.push(if hi > lo { hi - lo } else { 1.0 });
        }
        Ok(Self { min, scale })
    }

    pub fn channels(&self) -> usize {
        self.min.len()
    }

    pub fn normalize(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| (m[(r, c)] - self.min[c]) / self.scale[c])
    }

    pub fn denormalize(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)] * self.scale[c] + self.min[c])
    }

    /// Denormalizes and clamps at zero, since every channel is a physical
    /// nonnegative quantity.
    pub fn denormalize_clamped(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        self.denormalize(m).map(|v| v.max(0.0))
    }
}
