use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::loss::{SampleError, SampleEval, SampleLoss};
use super::{adam_step, weight_schedule, AdamState, TrainError, TrainMode, TrainingConfig};
use crate::data::Sample;
use crate::forecast::ForecastModel;
use crate::ies::{build_qp, operating_cost, IesConfig, IesQp};
use crate::qp::SolveOptions;

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub alpha: f64,
    pub beta: f64,
    pub train_l_error: f64,
    pub train_l_cost: f64,
    pub val_l_error: f64,
    pub val_l_cost: f64,
    /// Validation loss under the selection weights, used for checkpointing.
    pub val_combined: f64,
    pub skipped: usize,
    pub wall_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest validation combined loss.
    pub model: ForecastModel,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
    pub cost_scale: f64,
    pub skipped: usize,
}

/// The regularized dispatch template shared by every sample; only its
/// prices change per sample.
pub fn template_qp(ies: &IesConfig, sample: &Sample, eps: f64) -> Result<IesQp, TrainError> {
    Ok(build_qp(ies, &sample.actual)?.regularized(eps))
}

/// Mean absolute operating cost per step of the perfect-information
/// dispatch over `samples`, floored so that an all-zero set gives 1.
pub fn mean_oracle_cost(qp: &IesQp, samples: &[Sample], opts: &SolveOptions) -> Result<f64, TrainError> {
    let costs: Vec<Result<f64, TrainError>> = samples
        .par_iter()
        .map(|s| {
            let d = qp.dispatch(&s.actual, opts)?;
            Ok(operating_cost(&d.schedule, &s.actual, qp.index.step_hours).abs())
        })
        .collect();
    let mut sum = 0.0;
    for c in costs {
        sum += c?;
    }
    let steps = samples.len().max(1) * qp.index.horizon.max(1);
    let mean = sum / steps as f64;
    Ok(if mean > 1e-9 { mean } else { 1.0 })
}

struct Totals {
    l_error: f64,
    l_cost: f64,
    n: usize,
    skipped: usize,
    last_error: Option<String>,
}

impl Totals {
    fn new() -> Self {
        Self {
            l_error: 0.0,
            l_cost: 0.0,
            n: 0,
            skipped: 0,
            last_error: None,
        }
    }

    /// Folds per-sample results in order and returns the successful ones.
    fn absorb(&mut self, results: Vec<(usize, Result<SampleLoss, SampleError>)>) -> Vec<SampleLoss> {
        let mut ok = Vec::with_capacity(results.len());
        for (i, r) in results {
            match r {
                Ok(l) => {
                    self.l_error += l.l_error;
                    self.l_cost += l.l_cost.unwrap_or(0.0);
                    self.n += 1;
                    ok.push(l);
                }
                Err(e) => {
                    log::warn!("sample {i} skipped: {e}");
                    self.skipped += 1;
                    self.last_error = Some(e.to_string());
                }
            }
        }
        ok
    }

    fn means(&self) -> (f64, f64) {
        let n = self.n.max(1) as f64;
        (self.l_error / n, self.l_cost / n)
    }
}

fn evaluate(
    eval: &SampleEval<'_>,
    model: &ForecastModel,
    samples: &[Sample],
    order: &[usize],
) -> Vec<(usize, Result<SampleLoss, SampleError>)> {
    order
        .par_iter()
        .map(|&i| (i, eval.run(model, &samples[i])))
        .collect()
}

/// Trains `model` (whose normalizer must already be fitted on `train`).
/// Batches are shuffled per epoch from `cfg.seed`; samples in a batch are
/// evaluated in parallel and their gradients summed in batch order, so a
/// run is reproducible for a fixed seed regardless of thread count.
pub fn train(
    mut model: ForecastModel,
    train: &[Sample],
    val: &[Sample],
    ies: &IesConfig,
    cfg: &TrainingConfig,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    ies.validate()?;
    let Some(first) = train.first() else {
        return Err(TrainError::Config("training split is empty".into()));
    };
    if model.arch.horizon != ies.horizon_steps || first.actual.horizon() != ies.horizon_steps {
        return Err(TrainError::Config(format!(
            "forecast horizon {} and sample horizon {} must equal the dispatch horizon {}",
            model.arch.horizon,
            first.actual.horizon(),
            ies.horizon_steps
        )));
    }
    let qp = template_qp(ies, first, cfg.qp_eps)?;
    let opts = SolveOptions::with_tol(cfg.qp_tol);
    let kappa = match cfg.cost_scale {
        Some(k) => k,
        None => mean_oracle_cost(&qp, train, &opts)?,
    };
    let (sel_alpha, sel_beta) = match cfg.mode {
        TrainMode::Decoupled => (1.0, 0.0),
        TrainMode::EndToEnd => (cfg.alpha_end, cfg.beta_end),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(model.n_params());
    let mut theta = model.flat_params();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let val_order: Vec<usize> = (0..val.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let (mut skipped, mut processed) = (0usize, 0usize);

    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let (alpha, beta) = weight_schedule(epoch, cfg.epochs, cfg);
        let eval = SampleEval {
            qp: &qp,
            opts,
            alpha,
            beta,
            kappa,
            cost: true,
            grad: true,
        };
        order.shuffle(&mut rng);
        let mut totals = Totals::new();
        for batch in order.chunks(cfg.batch_size) {
            let ok = totals.absorb(evaluate(&eval, &model, train, batch));
            if ok.is_empty() {
                continue;
            }
            let mut grad = vec![0.0; theta.len()];
            for l in &ok {
                for (g, d) in grad.iter_mut().zip(l.grad.as_ref().expect("gradient requested")) {
                    *g += d;
                }
            }
            let n = ok.len() as f64;
            grad.iter_mut().for_each(|g| *g /= n);
            adam_step(
                &mut theta,
                &grad,
                &mut adam,
                cfg.learning_rate,
                (cfg.beta1, cfg.beta2),
                cfg.adam_eps,
            );
            model.set_flat_params(&theta)?;
        }

        let val_eval = SampleEval { grad: false, ..eval };
        let mut vt = Totals::new();
        vt.absorb(evaluate(&val_eval, &model, val, &val_order));

        skipped += totals.skipped + vt.skipped;
        processed += totals.n + totals.skipped + vt.n + vt.skipped;
        if skipped as f64 > cfg.max_skip_fraction * processed as f64 {
            return Err(TrainError::TooManySkips {
                skipped,
                total: processed,
                limit: 100.0 * cfg.max_skip_fraction,
                last: vt.last_error.or(totals.last_error).unwrap_or_default(),
            });
        }

        let (tr_err, tr_cost) = totals.means();
        let (va_err, va_cost) = if vt.n > 0 { vt.means() } else { (tr_err, tr_cost) };
        let val_combined = sel_alpha * va_err + sel_beta * va_cost / kappa;
        if !(tr_err.is_finite() && tr_cost.is_finite() && val_combined.is_finite()) {
            return Err(TrainError::NonFinite(epoch));
        }
        log::info!(
            "epoch {epoch}: alpha {alpha:.3} beta {beta:.3} train err {tr_err:.4} cost {tr_cost:.2} val err {va_err:.4} cost {va_cost:.2}"
        );
        log.push(EpochLog {
            epoch,
            alpha,
            beta,
            train_l_error: tr_err,
            train_l_cost: tr_cost,
            val_l_error: va_err,
            val_l_cost: va_cost,
            val_combined,
            skipped: totals.skipped + vt.skipped,
            wall_s: started.elapsed().as_secs_f64(),
        });
        if best.as_ref().is_none_or(|(b, _, _)| val_combined < *b) {
            best = Some((val_combined, epoch, theta.clone()));
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch");
    model.set_flat_params(&params)?;
    Ok(TrainOutcome {
        model,
        best_epoch,
        log,
        cost_scale: kappa,
        skipped,
    })
}

/// Writes the training log as CSV, one row per epoch.
pub fn write_log_csv<W: Write>(log: &[EpochLog], w: W) -> Result<(), TrainError> {
    let mut wtr = csv::Writer::from_writer(w);
    for row in log {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}
