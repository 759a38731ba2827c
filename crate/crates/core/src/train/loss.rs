use nalgebra::{DMatrix, DVector};

use super::{TrainMode, TrainingConfig};
use crate::data::Sample;
use crate::forecast::{ForecastError, ForecastModel};
use crate::ies::{operating_cost, pred_index, Channel, IesError, IesQp, Schedule, ScenarioSeries};
use crate::qp::{self, SolveOptions};

/// Sum over steps of the squared Euclidean prediction error.
pub fn loss_error(pred: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    assert_eq!(pred.shape(), truth.shape(), "prediction and truth shapes differ");
    (pred - truth).norm_squared()
}

/// `alpha * l_err + beta * l_cost`
pub fn combined_loss(alpha: f64, beta: f64, l_err: f64, l_cost: f64) -> f64 {
    alpha * l_err + beta * l_cost
}

/// `(alpha, beta)` for `epoch` of `total_epochs`, linear between the
/// configured endpoints. Decoupled training keeps `(1, 0)`.
pub fn weight_schedule(epoch: usize, total_epochs: usize, cfg: &TrainingConfig) -> (f64, f64) {
    if cfg.mode == TrainMode::Decoupled {
        return (1.0, 0.0);
    }
    let f = if total_epochs <= 1 {
        0.0
    } else {
        epoch.min(total_epochs - 1) as f64 / (total_epochs - 1) as f64
    };
    let alpha = (1.0 - f) * cfg.alpha_start + f * cfg.alpha_end;
    let beta = (1.0 - f) * cfg.beta_start + f * cfg.beta_end;
    (alpha, beta)
}

/// Operating cost of the dispatch solved against `predicted`.
#[derive(Debug, Clone)]
pub struct CostEval {
    pub cost: f64,
    pub schedule: Schedule,
    /// Gradient of the cost with respect to the prediction vector (physical
    /// units), when requested.
    pub grad: Option<DVector<f64>>,
}

/// Solves the dispatch on `predicted` with the (regularized) template
/// `model` and returns the operating cost of the decoded schedule. The
/// gradient comes from the implicit backward pass with `dL/dx = c`.
pub fn loss_cost(
    model: &IesQp,
    predicted: &ScenarioSeries,
    opts: &SolveOptions,
    with_grad: bool,
) -> Result<CostEval, IesError> {
    let qp = model.priced(predicted)?;
    let y = predicted.prediction_vector();
    let sol = qp::solve(&qp, &y, opts).map_err(|e| model.name_error(e))?;
    let schedule = Schedule::decode(&model.index, &model.cfg, &sol.primal)?;
    let cost = operating_cost(&schedule, predicted, model.index.step_hours);
    let grad = if with_grad {
        Some(qp::backward(&qp, &sol, &y, qp.lin_cost()).map_err(IesError::Qp)?)
    } else {
        None
    };
    Ok(CostEval {
        cost,
        schedule,
        grad,
    })
}

/// Losses of one sample and, optionally, the gradient of the weighted loss.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleLoss {
    pub l_error: f64,
    pub l_cost: Option<f64>,
    /// Flat parameter gradient of `alpha * l_error + beta * l_cost / kappa`.
    pub grad: Option<Vec<f64>>,
}

/// What [`SampleEval::run`] should compute.
#[derive(Debug, Clone, Copy)]
pub struct SampleEval<'a> {
    pub qp: &'a IesQp,
    pub opts: SolveOptions,
    pub alpha: f64,
    pub beta: f64,
    /// Cost normalizer.
    pub kappa: f64,
    pub cost: bool,
    pub grad: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum SampleError {
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Ies(#[from] IesError),
}

/// Physical prediction vector (clamped at zero) and the mask of unclamped
/// entries, from a normalized `horizon x 6` prediction.
fn physical(model: &ForecastModel, pred: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let raw = model.normalizer.denormalize(pred);
    let mut y = DVector::zeros(raw.len());
    for t in 0..raw.nrows() {
        for ch in Channel::ALL {
            y[pred_index(t, ch)] = raw[(t, ch.index())].max(0.0);
        }
    }
    let mask = raw.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    (y, mask)
}

impl SampleEval<'_> {
    pub fn run(&self, model: &ForecastModel, sample: &Sample) -> Result<SampleLoss, SampleError> {
        let window = sample.window(&model.normalizer);
        let truth = window.target.as_ref().expect("sample windows carry a target");
        let mut taped = model.predict_with_tape(&window)?;
        let pred = taped.prediction.clone();
        let l_error = loss_error(&pred, truth);
        let mut d_pred = (&pred - truth) * (2.0 * self.alpha);

        let need_cost = self.cost || (self.grad && self.beta > 0.0);
        let mut l_cost = None;
        if need_cost {
            let (y, mask) = physical(model, &pred);
            let predicted = sample.actual.with_prediction(&y)?;
            let with_grad = self.grad && self.beta > 0.0;
            let eval = loss_cost(self.qp, &predicted, &self.opts, with_grad)?;
            l_cost = Some(eval.cost);
            if let Some(g) = eval.grad {
                let w = self.beta / self.kappa;
                let scale = &model.normalizer.scale;
                for t in 0..pred.nrows() {
                    for ch in Channel::ALL {
                        let c = ch.index();
                        d_pred[(t, c)] += w * g[pred_index(t, ch)] * scale[c] * mask[(t, c)];
                    }
                }
            }
        }
        let grad = if self.grad {
            Some(ForecastModel::flatten_grads(&taped.backprop(&d_pred)?))
        } else {
            None
        };
        Ok(SampleLoss {
            l_error,
            l_cost,
            grad,
        })
    }
}
