use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::forecast::Normalizer;
use crate::ies::{Channel, N_CHANNELS};

/// Truth entries smaller than this in magnitude are left out of MAPE.
pub const MAPE_FLOOR: f64 = 1e-6;

/// Prediction quality over a set of days. MAPE, RMSE and R2 are computed on
/// normalized values; MAE on denormalized (clamped) predictions, per channel
/// and as the unweighted channel mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// percent
    pub mape: f64,
    /// Entries left out of MAPE because the truth was near zero.
    pub mape_excluded: usize,
    pub rmse: f64,
    pub r2: f64,
    /// `(channel name, MAE)` in physical units.
    pub mae: Vec<(String, f64)>,
    pub mae_mean: f64,
}

/// Metrics of normalized predictions against normalized truths. When the
/// truth has zero variance R2 is 1 for an exact fit and 0 otherwise.
pub fn metrics(pred: &[DMatrix<f64>], truth: &[DMatrix<f64>], norm: &Normalizer) -> Metrics {
    assert_eq!(pred.len(), truth.len(), "prediction and truth counts differ");
    let mut n = 0usize;
    let (mut ape, mut n_ape, mut excluded) = (0.0, 0usize, 0usize);
    let (mut sq, mut sum_y) = (0.0, 0.0);
    let mut abs_err = [0.0; N_CHANNELS];
    let mut rows = 0usize;
    for (p, y) in pred.iter().zip(truth) {
        assert_eq!(p.shape(), y.shape(), "prediction and truth shapes differ");
        let pd = norm.denormalize_clamped(p);
        let yd = norm.denormalize(y);
        for (pv, yv) in p.iter().zip(y.iter()) {
            let e = pv - yv;
            sq += e * e;
            sum_y += yv;
            n += 1;
            if yv.abs() < MAPE_FLOOR {
                excluded += 1;
            } else {
                ape += (e / yv).abs();
                n_ape += 1;
            }
        }
        for c in 0..p.ncols().min(N_CHANNELS) {
            for t in 0..p.nrows() {
                abs_err[c] += (pd[(t, c)] - yd[(t, c)]).abs();
            }
        }
        rows += p.nrows();
    }
    let mean_y = sum_y / n.max(1) as f64;
    let ss_tot: f64 = truth.iter().flat_map(|y| y.iter()).map(|v| (v - mean_y).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - sq / ss_tot
    } else if sq == 0.0 {
        1.0
    } else {
        0.0
    };
    let mae: Vec<(String, f64)> = Channel::ALL
        .iter()
        .map(|ch| (ch.name().to_string(), abs_err[ch.index()] / rows.max(1) as f64))
        .collect();
    let mae_mean = mae.iter().map(|(_, v)| v).sum::<f64>() / N_CHANNELS as f64;
    Metrics {
        mape: 100.0 * ape / n_ape.max(1) as f64,
        mape_excluded: excluded,
        rmse: (sq / n.max(1) as f64).sqrt(),
        r2,
        mae,
        mae_mean,
    }
}
