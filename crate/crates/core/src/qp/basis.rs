use nalgebra::{DMatrix, DVector};

/// Relative residual norm below which a row counts as a combination of the
/// rows already kept.
const DEPENDENCE_TOL: f64 = 1e-9;

/// Linearly independent subset of the equality rows.
///
/// Rows are scanned in order and kept when their component orthogonal to the
/// span of the previously kept rows is non-negligible, so later duplicates of
/// a row are the ones dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct EqBasis {
    pub kept: Vec<usize>,
    pub n_rows: usize,
}

impl EqBasis {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let mut ortho: Vec<DVector<f64>> = Vec::new();
        let mut kept = Vec::new();
        for i in 0..m {
            let row: DVector<f64> = a.row(i).transpose();
            let norm0 = row.norm();
            if norm0 == 0.0 {
                continue;
            }
            let mut v = row;
            // two passes of modified Gram-Schmidt
            for _ in 0..2 {
                for q in &ortho {
                    let proj = q.dot(&v);
                    v.axpy(-proj, q, 1.0);
                }
            }
            let norm = v.norm();
            if norm > DEPENDENCE_TOL * norm0 && ortho.len() < n {
                ortho.push(v / norm);
                kept.push(i);
            }
        }
        Self { kept, n_rows: m }
    }

    pub fn rank(&self) -> usize {
        self.kept.len()
    }

    pub fn is_full(&self) -> bool {
        self.kept.len() == self.n_rows
    }
}
