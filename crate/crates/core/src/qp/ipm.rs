//! Primal-dual interior-point method with Mehrotra predictor-corrector.
//!
//! Works on the slack form `G x + s = h, s >= 0` with multipliers `z >= 0`
//! and starts from an infeasible point, so zero-width bound intervals
//! (fixed variables) need no special handling.

use nalgebra::DVector;

use super::kkt::{factor, KktFactor, Prepared};
use super::problem::{inf_norm, kkt_blocks, ParamQP, PrimalDualSolution};
use super::{ConstraintRef, QpError};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Fallback ridges tried when the Newton system does not factor.
const RIDGES: [f64; 3] = [1e-12, 1e-10, 1e-8];
const STEP_FRACTION: f64 = 0.99;
const BLOWUP: f64 = 1e13;
/// Iterations without improving the best residual before giving up.
const STALL_ITERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Clone)]
struct Iterate {
    x: DVector<f64>,
    y: DVector<f64>,
    z: DVector<f64>,
    s: DVector<f64>,
}

struct Residuals {
    dual: DVector<f64>,
    primal_eq: DVector<f64>,
    primal_ineq: DVector<f64>,
    /// `G x - h`
    g_minus_h: DVector<f64>,
}

impl Residuals {
    fn compute(qp: &ParamQP, prep: &Prepared, it: &Iterate, b: &DVector<f64>, h: &DVector<f64>) -> Self {
        let n = qp.n_vars();
        let gx = prep.g_mul(&it.x);
        let dual = qp.quad_cost() * &it.x
            + qp.lin_cost()
            + prep.a_tr_mul(&it.y, n)
            + prep.g_tr_mul(&it.z, n);
        let primal_eq = prep.a_mul(&it.x) - b;
        let g_minus_h = gx - h;
        let primal_ineq = &g_minus_h + &it.s;
        Self {
            dual,
            primal_eq,
            primal_ineq,
            g_minus_h,
        }
    }

    fn violation(&self) -> f64 {
        self.g_minus_h.iter().fold(0.0_f64, |m, &v| m.max(v))
    }

    fn error(&self, z: &DVector<f64>) -> f64 {
        let comp = inf_norm(&z.component_mul(&self.g_minus_h));
        inf_norm(&self.dual)
            .max(inf_norm(&self.primal_eq))
            .max(comp)
            .max(self.violation())
    }
}

/// Solves `qp` at `prediction` to the requested KKT tolerance.
pub fn solve(
    qp: &ParamQP,
    prediction: &DVector<f64>,
    opts: &SolveOptions,
) -> Result<PrimalDualSolution, QpError> {
    qp.check_prediction(prediction)?;
    let prep = qp.prepared();
    let p = qp.n_ineq();
    let b_full = qp.eq_rhs(prediction);
    let b = DVector::from_iterator(
        prep.basis.rank(),
        prep.basis.kept.iter().map(|&i| b_full[i]),
    );
    let h = qp.ineq_rhs(prediction);

    // Least-squares start: z = s = 1.
    let ones = DVector::from_element(p, 1.0);
    let f0 = factor_with_fallback(qp, &prep, &ones, &ones).map_err(|_| {
        if p == 0 {
            QpError::Unbounded
        } else {
            QpError::SingularKktJacobian
        }
    })?;
    // minimizes 1/2 x'Qx + c'x + 1/2 |Gx - h|^2 subject to Ax = b
    let (x, y, _) = f0.solve(&-qp.lin_cost(), &b, &-&h);
    let gx = prep.g_mul(&x);
    let mut s = &h - &gx;
    let mut z = -&s;
    shift_positive(&mut s);
    shift_positive(&mut z);
    let mut it = Iterate { x, y, z, s };

    let mut iterations = 0;
    // Past the attainable accuracy the Newton systems get too ill-conditioned
    // to make progress, so remember the best point seen.
    let mut best: Option<(f64, Iterate, usize)> = None;
    loop {
        let res = Residuals::compute(qp, &prep, &it, &b, &h);
        let err = res.error(&it.z);
        if err <= opts.tol {
            let sol = finish(qp, &prep, &it, iterations, prediction);
            if sol.kkt_residual <= opts.tol {
                return Ok(sol);
            }
        }
        if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
            best = Some((err, it.clone(), iterations));
        }
        let stalled = best
            .as_ref()
            .is_some_and(|(_, _, at)| iterations >= at + STALL_ITERS);
        if iterations >= opts.max_iter || p == 0 || stalled {
            let (_, best_it, _) = best.expect("set above");
            let res = Residuals::compute(qp, &prep, &best_it, &b, &h);
            return Err(classify_failure(qp, &best_it, &res, &b_full, iterations, opts));
        }
        iterations += 1;

        let mu = it.s.dot(&it.z) / p as f64;
        let kkt = match factor_with_fallback(qp, &prep, &it.z, &it.s) {
            Ok(f) => f,
            Err(_) => return Err(QpError::SingularKktJacobian),
        };

        // predictor
        let rc_aff = it.s.component_mul(&it.z);
        let (_, _, dz_a, ds_a) = newton(&prep, &kkt, &it, &res, &rc_aff);
        let alpha_aff = max_step(&it.s, &ds_a).min(max_step(&it.z, &dz_a));
        let mu_aff = (&it.s + &ds_a * alpha_aff).dot(&(&it.z + &dz_a * alpha_aff)) / p as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc = rc_aff + ds_a.component_mul(&dz_a) - DVector::from_element(p, sigma * mu);
        let (dx, dy, dz, ds) = newton(&prep, &kkt, &it, &res, &rc);
        let alpha = (STEP_FRACTION * max_step(&it.s, &ds).min(max_step(&it.z, &dz))).min(1.0);

        log::trace!(
            "ipm iter {iterations}: error {:e} gap {mu:e} sigma {sigma:.3e} step {alpha:.3e}",
            res.error(&it.z)
        );
        it.x += &dx * alpha;
        it.y += &dy * alpha;
        it.z += &dz * alpha;
        it.s += &ds * alpha;

        if alpha < 1e-12 || inf_norm(&it.x) > BLOWUP || inf_norm(&it.z) > BLOWUP {
            let res = Residuals::compute(qp, &prep, &it, &b, &h);
            return Err(classify_failure(qp, &it, &res, &b_full, iterations, opts));
        }
    }
}

fn factor_with_fallback<'a>(
    qp: &ParamQP,
    prep: &'a Prepared,
    z: &DVector<f64>,
    s: &DVector<f64>,
) -> Result<KktFactor<'a>, ()> {
    if let Ok(f) = factor(qp, prep, z, s, 0.0, 0.0) {
        return Ok(f);
    }
    for ridge in RIDGES {
        if let Ok(f) = factor(qp, prep, z, s, ridge, 0.0) {
            log::debug!("Newton system regularized with ridge {ridge:e}");
            return Ok(f);
        }
    }
    Err(())
}

type Step = (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>);

/// Newton direction for complementarity target `s * z = s * z - rc`.
fn newton(
    prep: &Prepared,
    kkt: &KktFactor<'_>,
    it: &Iterate,
    res: &Residuals,
    rc: &DVector<f64>,
) -> Step {
    let t = (it.z.component_mul(&res.primal_ineq) - rc).component_div(&it.s);
    let (dx, dy, dz) = kkt.solve(&-&res.dual, &-&res.primal_eq, &t);
    let ds = -&res.primal_ineq - prep.g_mul(&dx);
    (dx, dy, dz, ds)
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&a, &d)| -a / d)
        .fold(f64::INFINITY, f64::min)
}

fn shift_positive(v: &mut DVector<f64>) {
    if v.is_empty() {
        return;
    }
    let alpha = -v.min();
    if alpha >= 0.0 {
        v.add_scalar_mut(1.0 + alpha);
    }
}

fn finish(
    qp: &ParamQP,
    prep: &Prepared,
    it: &Iterate,
    iterations: usize,
    prediction: &DVector<f64>,
) -> PrimalDualSolution {
    let mut eq_duals = DVector::zeros(qp.n_eq());
    for (r, &i) in prep.basis.kept.iter().enumerate() {
        eq_duals[i] = it.y[r];
    }
    let kkt_residual = kkt_blocks(qp, prediction, &it.x, &eq_duals, &it.z).residual();
    PrimalDualSolution {
        primal: it.x.clone(),
        eq_duals,
        ineq_duals: it.z.clone(),
        ineq_slacks: it.s.clone(),
        kkt_residual,
        iterations,
    }
}

fn classify_failure(
    qp: &ParamQP,
    it: &Iterate,
    res: &Residuals,
    b_full: &DVector<f64>,
    iterations: usize,
    opts: &SolveOptions,
) -> QpError {
    // Equality feasibility is judged on all original rows so inconsistent
    // redundant rows are reported too.
    let eq_res = qp.eq_matrix() * &it.x - b_full;
    let (mut worst, mut row) = (0.0_f64, None);
    for (i, &v) in eq_res.iter().enumerate() {
        if v.abs() > worst {
            worst = v.abs();
            row = Some(ConstraintRef::Eq(i));
        }
    }
    for (j, &v) in res.g_minus_h.iter().enumerate() {
        if v > worst {
            worst = v;
            row = Some(ConstraintRef::Ineq(j));
        }
    }
    if worst > opts.tol {
        return QpError::Infeasible {
            residual: worst,
            constraint: row,
        };
    }
    if inf_norm(&it.x) > 1e10 {
        return QpError::Unbounded;
    }
    QpError::MaxIterations {
        iterations,
        residual: res.error(&it.z),
    }
}
