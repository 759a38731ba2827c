//! Gradients of a scalar loss of the QP solution with respect to the
//! prediction vector, by implicit differentiation of the optimality system
//!
//! ```text
//!     F(x, lambda, mu; y) = [ Q x + c + A' lambda + G' mu ]
//!                           [ A x - b(y)                  ]
//!                           [ diag(mu) (G x - h(y))       ]
//! ```
//!
//! The adjoint system `dF/dU' v = (dL/dx, 0, 0)` is solved and the gradient
//! is `-v' dF/dy = B' v_lambda + H' (mu * v_mu)`. In terms of
//! `omega = mu * v_mu` the adjoint system is
//!
//! ```text
//!     [ Q      A'  G' ] [v_x     ]   [dL/dx]
//!     [ A      0   0  ] [v_lambda] = [0    ]
//!     [ mu G   0  -s  ] [omega   ]   [0    ]
//! ```
//!
//! which is the interior-point Newton matrix at `z = mu` (the final interior
//! iterate), so the same factorization code is used.

use nalgebra::DVector;

use super::kkt::factor;
use super::problem::{ParamQP, PrimalDualSolution};
use super::QpError;

/// Relative Cholesky pivot below which the adjoint system counts as singular.
pub const SINGULAR_PIVOT: f64 = 1e-12;
/// Ridge added to the adjoint system when it is singular.
pub const FALLBACK_RIDGE: f64 = 1e-8;
const MIN_SLACK: f64 = 1e-300;

/// Returns `dL/dy` given `dL/dx` at a solution produced by [`super::solve`].
pub fn backward(
    qp: &ParamQP,
    sol: &PrimalDualSolution,
    prediction: &DVector<f64>,
    loss_grad_primal: &DVector<f64>,
) -> Result<DVector<f64>, QpError> {
    qp.check_prediction(prediction)?;
    let n = qp.n_vars();
    let p = qp.n_ineq();
    if loss_grad_primal.len() != n || sol.primal.len() != n || sol.ineq_duals.len() != p {
        return Err(QpError::Dimension(
            "solution or loss gradient does not match the problem".into(),
        ));
    }
    let prep = qp.prepared();

    let slacks = if sol.ineq_slacks.len() == p {
        sol.ineq_slacks.map(|s| s.max(MIN_SLACK))
    } else {
        (qp.ineq_rhs(prediction) - qp.ineq_matrix() * &sol.primal).map(|s| s.max(MIN_SLACK))
    };
    let mu = sol.ineq_duals.map(|m| m.max(0.0));
    let kkt = match factor(qp, &prep, &mu, &slacks, 0.0, SINGULAR_PIVOT) {
        Ok(f) => f,
        Err(e) => {
            log::warn!(
                "adjoint KKT system singular (relative pivot {:e}); adding ridge {FALLBACK_RIDGE:e}",
                e.relative_pivot
            );
            factor(qp, &prep, &mu, &slacks, FALLBACK_RIDGE, 0.0)
                .map_err(|_| QpError::SingularKktJacobian)?
        }
    };

    let (_, v_lambda, omega) = kkt.solve(loss_grad_primal, &DVector::zeros(prep.n_eq()), &DVector::zeros(p));

    let mut grad = qp.ineq_rhs_sensitivity().tr_mul(&omega);
    let sens = qp.eq_rhs_sensitivity();
    for (r, &row) in prep.basis.kept.iter().enumerate() {
        let coef = v_lambda[r];
        if coef != 0.0 {
            for k in 0..grad.len() {
                grad[k] += coef * sens[(row, k)];
            }
        }
    }
    Ok(grad)
}

