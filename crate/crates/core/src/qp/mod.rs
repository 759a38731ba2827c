//! Differentiable convex QP layer.
//!
//! [`solve`] runs a primal-dual interior-point method on a [`ParamQP`] whose
//! constraint right-hand sides depend affinely on a prediction vector, and
//! [`backward`] maps a loss gradient on the primal solution back to the
//! prediction vector through the implicit function theorem applied to the
//! KKT system.
//!
//! A linear objective has piecewise-constant argmins, so callers differentiate
//! the [`ParamQP::regularize`]d problem (default [`DEFAULT_EPS`]).

mod basis;
mod dump;
mod implicit;
mod ipm;
mod kkt;
mod problem;

use std::fmt;

pub use basis::EqBasis;
pub use dump::{RowNames, FORMAT_TAG};
pub use implicit::{backward, FALLBACK_RIDGE, SINGULAR_PIVOT};
pub use ipm::{solve, SolveOptions, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use problem::{
    duality_gap, kkt_blocks, kkt_residual, KktBlocks, ParamQP, PrimalDualSolution, QpData,
};

/// Default quadratic regularization applied before differentiation.
pub const DEFAULT_EPS: f64 = 1e-4;

/// A constraint row of a [`ParamQP`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintRef {
    Eq(usize),
    Ineq(usize),
}

impl fmt::Display for ConstraintRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintRef::Eq(i) => write!(f, "equality row {i}"),
            ConstraintRef::Ineq(j) => write!(f, "inequality row {j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("problem is not convex: {0}")]
    NotConvex(String),
    #[error("infeasible: primal residual {residual:e} at {}", .constraint.map(|c| c.to_string()).unwrap_or_else(|| "unknown row".into()))]
    Infeasible {
        residual: f64,
        constraint: Option<ConstraintRef>,
    },
    #[error("unbounded: dual infeasibility detected (is the problem regularized?)")]
    Unbounded,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },
    #[error("KKT Jacobian is singular")]
    SingularKktJacobian,
    #[error("qp io: {0}")]
    Io(String),
}
