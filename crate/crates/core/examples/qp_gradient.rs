//! Differentiates a QP solution with respect to its right-hand-side
//! parameter and compares against central finite differences.
//!
//!     cargo run --example qp_gradient

use ies_e2e::qp::{self, backward, QpData, SolveOptions};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // min 0.5 x'Qx + c'x  s.t.  x1 + x2 + x3 = y1,  x >= y2
    let mut d = QpData::zeros(3, 2)
        .with_eq(
            DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            DVector::zeros(1),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
        )
        .with_ineq(
            -DMatrix::identity(3, 3),
            DVector::zeros(3),
            DMatrix::from_row_slice(3, 2, &[0.0, -1.0, 0.0, -1.0, 0.0, -1.0]),
        );
    d.quad_cost = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 4.0]));
    d.lin_cost = DVector::from_vec(vec![-1.0, 0.5, 0.0]);
    let qp = d.into_qp()?;
    let opts = SolveOptions::with_tol(1e-11);

    let y = DVector::from_vec(vec![2.0, 0.4]);
    let target = DVector::from_vec(vec![1.0, 0.5, 0.5]);
    let loss = |x: &DVector<f64>| 0.5 * (x - &target).norm_squared();

    let sol = qp::solve(&qp, &y, &opts)?;
    let grad = backward(&qp, &sol, &y, &(&sol.primal - &target))?;
    let h = 1e-6;
    for i in 0..y.len() {
        let (mut up, mut dn) = (y.clone(), y.clone());
        up[i] += h;
        dn[i] -= h;
        let fd = (loss(&qp::solve(&qp, &up, &opts)?.primal) - loss(&qp::solve(&qp, &dn, &opts)?.primal)) / (2.0 * h);
        println!("dL/dy{i}: implicit {:+.8}, finite difference {fd:+.8}", grad[i]);
    }
    Ok(())
}
