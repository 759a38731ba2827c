use chrono::{Duration, NaiveDateTime, Timelike};
use nalgebra::DMatrix;

use super::{DataError, DataTable};
use crate::forecast::{calendar_matrix, FeatureWindow, Normalizer};
use crate::ies::{Channel, ScenarioSeries, N_CHANNELS};

/// One day-ahead example in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// First target hour (midnight).
    pub start: NaiveDateTime,
    /// `history x 6`, kW and kW/m2
    pub history: DMatrix<f64>,
    /// `horizon x calendar features`
    pub calendar: DMatrix<f64>,
    /// Realized target day including prices.
    pub actual: ScenarioSeries,
}

impl Sample {
    /// `horizon x 6` realized channels.
    pub fn target(&self) -> DMatrix<f64> {
        channel_matrix(&self.actual)
    }

    /// Normalized model input with the normalized target attached.
    pub fn window(&self, norm: &Normalizer) -> FeatureWindow {
        FeatureWindow {
            history: norm.normalize(&self.history),
            calendar: self.calendar.clone(),
            target: Some(norm.normalize(&self.target())),
        }
    }
}

/// `steps x 6` matrix of the uncertain channels of a scenario.
pub fn channel_matrix(s: &ScenarioSeries) -> DMatrix<f64> {
    DMatrix::from_fn(s.horizon(), N_CHANNELS, |t, c| s.channel(Channel::ALL[c])[t])
}

fn contiguous(ts: &[NaiveDateTime]) -> bool {
    ts.windows(2).all(|w| w[1] - w[0] == Duration::hours(1))
}

/// Day-aligned, non-overlapping targets of `horizon` hours, each with the
/// `history` hours right before it. Days without a gap-free history and
/// target are skipped.
pub fn make_windows(table: &DataTable, history: usize, horizon: usize) -> Vec<Sample> {
    let ts = &table.timestamps;
    let mut out = Vec::new();
    for i in history..ts.len() {
        if ts[i].hour() != 0 || i + horizon > ts.len() {
            continue;
        }
        if !contiguous(&ts[i - history..i + horizon]) {
            continue;
        }
        let past = table.slice(i - history, history);
        out.push(Sample {
            start: ts[i],
            history: channel_matrix(&past),
            calendar: calendar_matrix(&ts[i..i + horizon]),
            actual: table.slice(i, horizon),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

/// Chronological 7:1:2 split: `floor(0.7 n)`, `floor(0.1 n)`, remainder.
pub fn split<T: Clone>(items: &[T]) -> Split<T> {
    let n = items.len();
    let n_train = 7 * n / 10;
    let n_val = n / 10;
    Split {
        train: items[..n_train].to_vec(),
        val: items[n_train..n_train + n_val].to_vec(),
        test: items[n_train + n_val..].to_vec(),
    }
}

/// Min-max statistics over every history and target row of `train`.
pub fn fit_normalizer(train: &[Sample]) -> Result<Normalizer, DataError> {
    if train.is_empty() {
        return Err(DataError::TooShort("training split is empty".into()));
    }
    let rows: usize = train.iter().map(|s| s.history.nrows() + s.actual.horizon()).sum();
    let mut all = DMatrix::zeros(rows, N_CHANNELS);
    let mut r = 0;
    for s in train {
        for m in [&s.history, &s.target()] {
            all.rows_mut(r, m.nrows()).copy_from(m);
            r += m.nrows();
        }
    }
    Ok(Normalizer::fit(&all)?)
}
