//! Factorization of the interior-point Newton system
//!
//! ```text
//!     [ Q + rI   A'   G' ] [dx]   [r1]
//!     [ A       -rI   0  ] [dy] = [r2]
//!     [ Z G      0   -S  ] [dz]   [r3]
//! ```
//!
//! with `Z = diag(z)`, `S = diag(s)`. When `Q` is diagonal and every row of
//! `G` touches a single variable (pure bounds), `dz` is eliminated, the (1,1)
//! block `Q + G' (Z/S) G` is diagonal and only a dense Schur complement
//! `A H^-1 A'` over the equality rows is factored. Otherwise the full matrix
//! is factored by pivoted LU: eliminating `dz` there would add weights `z/s`
//! (up to ~1e14 near the solution) onto a dense `Q` and destroy it.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, LU};

use super::basis::EqBasis;
use super::problem::ParamQP;

pub(crate) type SparseRows = Vec<Vec<(usize, f64)>>;

/// Sparsity data derived once per constraint structure.
#[derive(Debug)]
pub(crate) struct Prepared {
    pub basis: EqBasis,
    /// Kept equality rows, renumbered `0..rank`.
    pub a_rows: SparseRows,
    /// Column view of `a_rows`: `(kept row, value)` per variable.
    pub a_cols: SparseRows,
    pub g_rows: SparseRows,
    pub g_single: bool,
}

impl Prepared {
    pub fn new(eq: &DMatrix<f64>, ineq: &DMatrix<f64>) -> Self {
        let basis = EqBasis::new(eq);
        let a_rows = sparse_rows(eq, basis.kept.iter().copied());
        let mut a_cols = vec![Vec::new(); eq.ncols()];
        for (r, row) in a_rows.iter().enumerate() {
            for &(j, v) in row {
                a_cols[j].push((r, v));
            }
        }
        let g_rows = sparse_rows(ineq, 0..ineq.nrows());
        let g_single = g_rows.iter().all(|r| r.len() <= 1);
        Self {
            basis,
            a_rows,
            a_cols,
            g_rows,
            g_single,
        }
    }

    pub fn n_eq(&self) -> usize {
        self.a_rows.len()
    }

    pub fn a_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        rows_mul(&self.a_rows, x)
    }

    pub fn a_tr_mul(&self, y: &DVector<f64>, n: usize) -> DVector<f64> {
        rows_tr_mul(&self.a_rows, y, n)
    }

    pub fn g_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        rows_mul(&self.g_rows, x)
    }

    pub fn g_tr_mul(&self, z: &DVector<f64>, n: usize) -> DVector<f64> {
        rows_tr_mul(&self.g_rows, z, n)
    }
}

fn sparse_rows(m: &DMatrix<f64>, rows: impl Iterator<Item = usize>) -> SparseRows {
    rows.map(|i| {
        (0..m.ncols())
            .filter_map(|j| {
                let v = m[(i, j)];
                (v != 0.0).then_some((j, v))
            })
            .collect()
    })
    .collect()
}

fn rows_mul(rows: &SparseRows, x: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(
        rows.len(),
        rows.iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum::<f64>()),
    )
}

fn rows_tr_mul(rows: &SparseRows, y: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (r, row) in rows.iter().enumerate() {
        let yr = y[r];
        if yr != 0.0 {
            for &(j, v) in row {
                out[j] += v * yr;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Singular {
    pub relative_pivot: f64,
}

pub(crate) enum KktFactor<'a> {
    Reduced {
        prep: &'a Prepared,
        /// `z / s`
        w: DVector<f64>,
        h: DVector<f64>,
        schur: Option<Cholesky<f64, Dyn>>,
    },
    Full {
        lu: LU<f64, Dyn, Dyn>,
        s: DVector<f64>,
    },
}

/// Factors the Newton system at multipliers `z` and slacks `s`.
///
/// `pivot_tol` rejects nearly singular factorizations: on the reduced path
/// when some Cholesky pivot falls below `pivot_tol` times the diagonal entry
/// it started from (a row numerically dependent on the rows before it), on
/// the full path when the smallest LU pivot falls below `pivot_tol` times
/// the largest.
pub(crate) fn factor<'a>(
    qp: &ParamQP,
    prep: &'a Prepared,
    z: &DVector<f64>,
    s: &DVector<f64>,
    ridge: f64,
    pivot_tol: f64,
) -> Result<KktFactor<'a>, Singular> {
    if qp.quad_is_diagonal() && prep.g_single {
        reduced(qp, prep, z.component_div(s), ridge, pivot_tol)
    } else {
        full(qp, prep, z, s, ridge, pivot_tol)
    }
}

fn reduced<'a>(
    qp: &ParamQP,
    prep: &'a Prepared,
    w: DVector<f64>,
    ridge: f64,
    pivot_tol: f64,
) -> Result<KktFactor<'a>, Singular> {
    let m = prep.n_eq();
    let mut h: DVector<f64> = qp.quad_cost().diagonal().add_scalar(ridge);
    for (row, &wj) in prep.g_rows.iter().zip(w.iter()) {
        if let Some(&(j, g)) = row.first() {
            h[j] += wj * g * g;
        }
    }
    let hmax = h.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    if let Some(i) = h.iter().position(|&v| !(v > pivot_tol * hmax) || v <= 0.0) {
        return Err(Singular {
            relative_pivot: h[i] / hmax.max(f64::MIN_POSITIVE),
        });
    }

    let schur = if m == 0 {
        None
    } else {
        let mut sc = DMatrix::zeros(m, m);
        for (j, col) in prep.a_cols.iter().enumerate() {
            let inv = 1.0 / h[j];
            for &(r1, a1) in col {
                for &(r2, a2) in col {
                    sc[(r1, r2)] += a1 * a2 * inv;
                }
            }
        }
        for i in 0..m {
            sc[(i, i)] += ridge;
        }
        Some(checked_cholesky(sc, pivot_tol)?)
    };
    Ok(KktFactor::Reduced { prep, w, h, schur })
}

fn full<'a>(
    qp: &ParamQP,
    prep: &Prepared,
    z: &DVector<f64>,
    s: &DVector<f64>,
    ridge: f64,
    pivot_tol: f64,
) -> Result<KktFactor<'a>, Singular> {
    let n = qp.n_vars();
    let m = prep.n_eq();
    let p = prep.g_rows.len();
    let mut k = DMatrix::zeros(n + m + p, n + m + p);
    k.view_mut((0, 0), (n, n)).copy_from(qp.quad_cost());
    for i in 0..n {
        k[(i, i)] += ridge;
    }
    for (r, row) in prep.a_rows.iter().enumerate() {
        for &(j, v) in row {
            k[(n + r, j)] = v;
            k[(j, n + r)] = v;
        }
        k[(n + r, n + r)] = -ridge;
    }
    for (r, row) in prep.g_rows.iter().enumerate() {
        let i = n + m + r;
        for &(j, v) in row {
            k[(j, i)] = v;
            k[(i, j)] = z[r] * v;
        }
        k[(i, i)] = -s[r];
    }
    let lu = k.lu();
    let (lo, hi) = lu
        .u()
        .diagonal()
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &u| (lo.min(u.abs()), hi.max(u.abs())));
    let relative_pivot = if hi > 0.0 { lo / hi } else { 1.0 };
    if !lu.is_invertible() || relative_pivot < pivot_tol {
        return Err(Singular { relative_pivot });
    }
    Ok(KktFactor::Full { lu, s: s.clone() })
}

fn checked_cholesky(mat: DMatrix<f64>, pivot_tol: f64) -> Result<Cholesky<f64, Dyn>, Singular> {
    let diag = mat.diagonal();
    let chol = Cholesky::new(mat).ok_or(Singular {
        relative_pivot: 0.0,
    })?;
    if pivot_tol > 0.0 {
        let l = chol.l_dirty();
        for i in 0..diag.len() {
            let rel = l[(i, i)] * l[(i, i)] / diag[i];
            if !(rel >= pivot_tol) {
                return Err(Singular {
                    relative_pivot: rel,
                });
            }
        }
    }
    Ok(chol)
}

impl KktFactor<'_> {
    /// Solves the system with third block right-hand side `-s * t`, i.e.
    /// `dz = (z/s) G dx + t`. `dy` is indexed by kept equality rows.
    pub fn solve(
        &self,
        r1: &DVector<f64>,
        r2: &DVector<f64>,
        t: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        match self {
            KktFactor::Reduced { prep, w, h, schur } => {
                let n = r1.len();
                let r1 = r1 - prep.g_tr_mul(t, n);
                let u = r1.component_div(h);
                let (dx, dy) = match schur {
                    None => (u, DVector::zeros(0)),
                    Some(sc) => {
                        let dy = sc.solve(&(prep.a_mul(&u) - r2));
                        let dx = u - prep.a_tr_mul(&dy, n).component_div(h);
                        (dx, dy)
                    }
                };
                let dz = w.component_mul(&prep.g_mul(&dx)) + t;
                (dx, dy, dz)
            }
            KktFactor::Full { lu, s } => {
                let n = r1.len();
                let m = r2.len();
                let p = t.len();
                let mut rhs = DVector::zeros(n + m + p);
                rhs.rows_mut(0, n).copy_from(r1);
                rhs.rows_mut(n, m).copy_from(r2);
                rhs.rows_mut(n + m, p).copy_from(&(-s.component_mul(t)));
                let sol = lu.solve(&rhs).expect("checked invertible");
                (
                    sol.rows(0, n).into_owned(),
                    sol.rows(n, m).into_owned(),
                    sol.rows(n + m, p).into_owned(),
                )
            }
        }
    }
}
