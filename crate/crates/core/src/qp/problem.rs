use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use super::kkt::Prepared;
use super::QpError;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

/// Raw, unvalidated parts of a parametric QP.
///
/// ```text
///     minimize     1/2 x' Q x + c' x
///     subject to   A x  = b0 + B y
///                  G x <= h0 + H y
/// ```
///
/// `y` is the flattened prediction vector. Matrices are dense; the solver
/// extracts row sparsity itself.
#[derive(Debug, Clone, PartialEq)]
pub struct QpData {
    pub quad_cost: DMatrix<f64>,
    pub lin_cost: DVector<f64>,
    pub eq_matrix: DMatrix<f64>,
    pub eq_rhs_base: DVector<f64>,
    pub ineq_matrix: DMatrix<f64>,
    pub ineq_rhs_base: DVector<f64>,
    pub eq_rhs_sensitivity: DMatrix<f64>,
    pub ineq_rhs_sensitivity: DMatrix<f64>,
}

impl QpData {
    /// An `n`-variable problem with no constraints, zero cost and `k`
    /// prediction coordinates.
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            quad_cost: DMatrix::zeros(n, n),
            lin_cost: DVector::zeros(n),
            eq_matrix: DMatrix::zeros(0, n),
            eq_rhs_base: DVector::zeros(0),
            ineq_matrix: DMatrix::zeros(0, n),
            ineq_rhs_base: DVector::zeros(0),
            eq_rhs_sensitivity: DMatrix::zeros(0, k),
            ineq_rhs_sensitivity: DMatrix::zeros(0, k),
        }
    }

    pub fn with_eq(mut self, a: DMatrix<f64>, b0: DVector<f64>, sens: DMatrix<f64>) -> Self {
        self.eq_matrix = a;
        self.eq_rhs_base = b0;
        self.eq_rhs_sensitivity = sens;
        self
    }

    pub fn with_ineq(mut self, g: DMatrix<f64>, h0: DVector<f64>, sens: DMatrix<f64>) -> Self {
        self.ineq_matrix = g;
        self.ineq_rhs_base = h0;
        self.ineq_rhs_sensitivity = sens;
        self
    }

    pub fn into_qp(self) -> Result<ParamQP, QpError> {
        ParamQP::new(self)
    }
}

/// A validated convex QP whose constraint right-hand sides depend affinely on
/// a prediction vector.
#[derive(Debug, Clone)]
pub struct ParamQP {
    data: QpData,
    quad_diagonal: bool,
    prepared: OnceLock<Arc<Prepared>>,
}

impl PartialEq for ParamQP {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

impl ParamQP {
    pub fn new(data: QpData) -> Result<Self, QpError> {
        check_dimensions(&data)?;
        let quad_diagonal = check_quad_cost(&data.quad_cost)?;
        Ok(Self {
            data,
            quad_diagonal,
            prepared: OnceLock::new(),
        })
    }

    pub fn n_vars(&self) -> usize {
        self.data.lin_cost.len()
    }

    pub fn n_eq(&self) -> usize {
        self.data.eq_matrix.nrows()
    }

    pub fn n_ineq(&self) -> usize {
        self.data.ineq_matrix.nrows()
    }

    pub fn n_pred(&self) -> usize {
        self.data.eq_rhs_sensitivity.ncols()
    }

    pub fn quad_cost(&self) -> &DMatrix<f64> {
        &self.data.quad_cost
    }

    pub fn lin_cost(&self) -> &DVector<f64> {
        &self.data.lin_cost
    }

    pub fn eq_matrix(&self) -> &DMatrix<f64> {
        &self.data.eq_matrix
    }

    pub fn eq_rhs_base(&self) -> &DVector<f64> {
        &self.data.eq_rhs_base
    }

    pub fn ineq_matrix(&self) -> &DMatrix<f64> {
        &self.data.ineq_matrix
    }

    pub fn ineq_rhs_base(&self) -> &DVector<f64> {
        &self.data.ineq_rhs_base
    }

    pub fn eq_rhs_sensitivity(&self) -> &DMatrix<f64> {
        &self.data.eq_rhs_sensitivity
    }

    pub fn ineq_rhs_sensitivity(&self) -> &DMatrix<f64> {
        &self.data.ineq_rhs_sensitivity
    }

    pub fn data(&self) -> &QpData {
        &self.data
    }

    pub fn into_data(self) -> QpData {
        self.data
    }

    /// Replaces the linear cost. The constraint structure (and the cached
    /// equality basis) is untouched.
    pub fn set_lin_cost(&mut self, c: DVector<f64>) -> Result<(), QpError> {
        if c.len() != self.n_vars() {
            return Err(QpError::Dimension(format!(
                "lin_cost has length {}, expected {}",
                c.len(),
                self.n_vars()
            )));
        }
        self.data.lin_cost = c;
        Ok(())
    }

    /// Returns a copy with `eps * I` added to the quadratic cost.
    pub fn regularize(&self, eps: f64) -> ParamQP {
        assert!(eps > 0.0, "regularization must be positive, got {eps}");
        let mut out = self.clone();
        for i in 0..out.n_vars() {
            out.data.quad_cost[(i, i)] += eps;
        }
        out
    }

    /// `b0 + B y`
    pub fn eq_rhs(&self, prediction: &DVector<f64>) -> DVector<f64> {
        &self.data.eq_rhs_base + &self.data.eq_rhs_sensitivity * prediction
    }

    /// `h0 + H y`
    pub fn ineq_rhs(&self, prediction: &DVector<f64>) -> DVector<f64> {
        &self.data.ineq_rhs_base + &self.data.ineq_rhs_sensitivity * prediction
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.data.quad_cost * x)) + self.data.lin_cost.dot(x)
    }

    pub fn quad_is_diagonal(&self) -> bool {
        self.quad_diagonal
    }

    /// Indices of the equality rows kept after redundant-row elimination.
    pub fn independent_eq_rows(&self) -> Vec<usize> {
        self.prepared().basis.kept.clone()
    }

    pub(crate) fn prepared(&self) -> Arc<Prepared> {
        self.prepared
            .get_or_init(|| {
                Arc::new(Prepared::new(
                    &self.data.eq_matrix,
                    &self.data.ineq_matrix,
                ))
            })
            .clone()
    }

    pub(crate) fn check_prediction(&self, prediction: &DVector<f64>) -> Result<(), QpError> {
        if prediction.len() != self.n_pred() {
            return Err(QpError::Dimension(format!(
                "prediction has length {}, expected {}",
                prediction.len(),
                self.n_pred()
            )));
        }
        Ok(())
    }
}

fn check_dimensions(d: &QpData) -> Result<(), QpError> {
    let n = d.lin_cost.len();
    if n == 0 {
        return Err(QpError::Dimension("n_vars must be positive".into()));
    }
    let k = d.eq_rhs_sensitivity.ncols();
    let checks = [
        ("quad_cost", d.quad_cost.shape(), (n, n)),
        ("eq_matrix", d.eq_matrix.shape(), (d.eq_matrix.nrows(), n)),
        ("eq_rhs_base", (d.eq_rhs_base.len(), 1), (d.eq_matrix.nrows(), 1)),
        (
            "eq_rhs_sensitivity",
            d.eq_rhs_sensitivity.shape(),
            (d.eq_matrix.nrows(), k),
        ),
        ("ineq_matrix", d.ineq_matrix.shape(), (d.ineq_matrix.nrows(), n)),
        (
            "ineq_rhs_base",
            (d.ineq_rhs_base.len(), 1),
            (d.ineq_matrix.nrows(), 1),
        ),
        (
            "ineq_rhs_sensitivity",
            d.ineq_rhs_sensitivity.shape(),
            (d.ineq_matrix.nrows(), k),
        ),
    ];
    for (name, got, want) in checks {
        if got != want {
            return Err(QpError::Dimension(format!(
                "{name} is {}x{}, expected {}x{}",
                got.0, got.1, want.0, want.1
            )));
        }
    }
    Ok(())
}

fn check_quad_cost(q: &DMatrix<f64>) -> Result<bool, QpError> {
    let n = q.nrows();
    let mut diagonal = true;
    for i in 0..n {
        for j in (i + 1)..n {
            if (q[(i, j)] - q[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(QpError::NotConvex(format!(
                    "quad_cost not symmetric at ({i}, {j})"
                )));
            }
            if q[(i, j)] != 0.0 || q[(j, i)] != 0.0 {
                diagonal = false;
            }
        }
    }
    let min_eig = if diagonal {
        q.diagonal().min()
    } else {
        q.clone().symmetric_eigen().eigenvalues.min()
    };
    if min_eig < -PSD_TOL {
        return Err(QpError::NotConvex(format!(
            "quad_cost has eigenvalue {min_eig:e}"
        )));
    }
    Ok(diagonal)
}

/// Primal decisions with equality (`lambda`) and inequality (`mu`) multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualSolution {
    pub primal: DVector<f64>,
    pub eq_duals: DVector<f64>,
    pub ineq_duals: DVector<f64>,
    /// Interior slacks `h - G x` at the final iterate; the implicit
    /// gradient evaluates the complementarity block here.
    pub ineq_slacks: DVector<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Infinity norms of the individual optimality-condition blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktBlocks {
    pub stationarity: f64,
    pub equality: f64,
    pub complementarity: f64,
    /// `max(0, G x - h)`; not part of the stacked residual.
    pub inequality_violation: f64,
}

impl KktBlocks {
    pub fn residual(&self) -> f64 {
        self.stationarity.max(self.equality).max(self.complementarity)
    }
}

pub fn kkt_blocks(
    qp: &ParamQP,
    prediction: &DVector<f64>,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    mu: &DVector<f64>,
) -> KktBlocks {
    let d = qp.data();
    let stat = &d.quad_cost * x
        + &d.lin_cost
        + d.eq_matrix.tr_mul(lambda)
        + d.ineq_matrix.tr_mul(mu);
    let eq = &d.eq_matrix * x - qp.eq_rhs(prediction);
    let g = &d.ineq_matrix * x - qp.ineq_rhs(prediction);
    let comp = mu.component_mul(&g);
    KktBlocks {
        stationarity: inf_norm(&stat),
        equality: inf_norm(&eq),
        complementarity: inf_norm(&comp),
        inequality_violation: g.iter().fold(0.0_f64, |m, &v| m.max(v)),
    }
}

/// Infinity norm of the stacked stationarity / equality / complementarity
/// residual at `point`.
pub fn kkt_residual(qp: &ParamQP, prediction: &DVector<f64>, point: &PrimalDualSolution) -> f64 {
    kkt_blocks(
        qp,
        prediction,
        &point.primal,
        &point.eq_duals,
        &point.ineq_duals,
    )
    .residual()
}

/// `|primal objective - dual objective|`, with the dual objective evaluated
/// through the Lagrangian at the stored point.
pub fn duality_gap(qp: &ParamQP, prediction: &DVector<f64>, sol: &PrimalDualSolution) -> f64 {
    let x = &sol.primal;
    let primal = qp.objective(x);
    let lagrangian = primal
        + sol
            .eq_duals
            .dot(&(qp.eq_matrix() * x - qp.eq_rhs(prediction)))
        + sol
            .ineq_duals
            .dot(&(qp.ineq_matrix() * x - qp.ineq_rhs(prediction)));
    (primal - lagrangian).abs()
}

pub(crate) fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, &e| m.max(e.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regularize_zero_matrix() {
        let qp = QpData::zeros(2, 0).into_qp().unwrap();
        let r = qp.regularize(1e-3);
        assert_eq!(r.quad_cost(), &(DMatrix::identity(2, 2) * 1e-3));
    }

    #[test]
    fn regularize_identity() {
        let mut d = QpData::zeros(3, 1);
        d.quad_cost = DMatrix::identity(3, 3);
        d.lin_cost = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let qp = d.into_qp().unwrap();
        let r = qp.regularize(0.5);
        assert_eq!(r.quad_cost(), &(DMatrix::identity(3, 3) * 1.5));
        assert_eq!(r.lin_cost(), qp.lin_cost());
        assert_eq!(r.eq_matrix(), qp.eq_matrix());
    }

    #[test]
    fn rejects_nonsymmetric_and_indefinite() {
        let mut d = QpData::zeros(2, 0);
        d.quad_cost = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(d.into_qp(), Err(QpError::NotConvex(_))));

        let mut d = QpData::zeros(2, 0);
        d.quad_cost = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(d.into_qp(), Err(QpError::NotConvex(_))));
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let d = QpData::zeros(2, 1).with_eq(
            DMatrix::zeros(1, 3),
            DVector::zeros(1),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(d.into_qp(), Err(QpError::Dimension(_))));
    }
}
