//! Solves a small parametric QP and reports the KKT residual and duality gap.
//!
//!     cargo run --example qp_solve

use ies_e2e::qp::{self, duality_gap, kkt_residual, QpData, SolveOptions};
use nalgebra::{DMatrix, DVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // min 0.5 |x|^2 - x1 - x2  s.t.  x1 + x2 = y,  0 <= x <= 0.8
    let mut d = QpData::zeros(2, 1)
        .with_eq(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::zeros(1), DMatrix::from_element(1, 1, 1.0))
        .with_ineq(
            DMatrix::from_row_slice(4, 2, &[-1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 1.0]),
            DVector::from_vec(vec![0.0, 0.0, 0.8, 0.8]),
            DMatrix::zeros(4, 1),
        );
    d.quad_cost = DMatrix::identity(2, 2);
    d.lin_cost = DVector::from_vec(vec![-1.0, -1.0]);
    let qp = d.into_qp()?;

    for y in [0.5, 1.2, 1.6] {
        let y = DVector::from_element(1, y);
        let sol = qp::solve(&qp, &y, &SolveOptions::default())?;
        println!(
            "y = {:.2}: x = ({:.4}, {:.4}), objective {:.6}, kkt {:.1e}, gap {:.1e}, {} iterations",
            y[0],
            sol.primal[0],
            sol.primal[1],
            qp.objective(&sol.primal),
            kkt_residual(&qp, &y, &sol),
            duality_gap(&qp, &y, &sol),
            sol.iterations
        );
    }
    Ok(())
}
