//! Self-describing JSON dump of a [`ParamQP`] (dense row-major matrices).

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::problem::{ParamQP, QpData};
use super::QpError;

pub const FORMAT_TAG: &str = "ies-e2e/param-qp/v1";

#[derive(Debug, Serialize, Deserialize)]
struct QpJson {
    format: String,
    n_vars: usize,
    n_eq: usize,
    n_ineq: usize,
    n_pred: usize,
    quad_cost: Vec<Vec<f64>>,
    lin_cost: Vec<f64>,
    eq_matrix: Vec<Vec<f64>>,
    eq_rhs_base: Vec<f64>,
    eq_rhs_sensitivity: Vec<Vec<f64>>,
    ineq_matrix: Vec<Vec<f64>>,
    ineq_rhs_base: Vec<f64>,
    ineq_rhs_sensitivity: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    row_names: Option<RowNames>,
}

/// Optional labels carried alongside the matrices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RowNames {
    pub columns: Vec<String>,
    pub eq_rows: Vec<String>,
    pub ineq_rows: Vec<String>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(name: &str, r: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>, QpError> {
    if r.len() != nrows || r.iter().any(|row| row.len() != ncols) {
        return Err(QpError::Dimension(format!(
            "{name} must be {nrows}x{ncols}"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| r[i][j]))
}

impl ParamQP {
    pub fn write_json<W: Write>(&self, w: W, names: Option<&RowNames>) -> Result<(), QpError> {
        let d = self.data();
        let doc = QpJson {
            format: FORMAT_TAG.to_string(),
            n_vars: self.n_vars(),
            n_eq: self.n_eq(),
            n_ineq: self.n_ineq(),
            n_pred: self.n_pred(),
            quad_cost: rows(&d.quad_cost),
            lin_cost: d.lin_cost.iter().copied().collect(),
            eq_matrix: rows(&d.eq_matrix),
            eq_rhs_base: d.eq_rhs_base.iter().copied().collect(),
            eq_rhs_sensitivity: rows(&d.eq_rhs_sensitivity),
            ineq_matrix: rows(&d.ineq_matrix),
            ineq_rhs_base: d.ineq_rhs_base.iter().copied().collect(),
            ineq_rhs_sensitivity: rows(&d.ineq_rhs_sensitivity),
            row_names: names.cloned(),
        };
        serde_json::to_writer(w, &doc).map_err(|e| QpError::Io(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<(ParamQP, Option<RowNames>), QpError> {
        let doc: QpJson = serde_json::from_reader(r).map_err(|e| QpError::Io(e.to_string()))?;
        if doc.format != FORMAT_TAG {
            return Err(QpError::Io(format!("unknown format tag {:?}", doc.format)));
        }
        let (n, m, p, k) = (doc.n_vars, doc.n_eq, doc.n_ineq, doc.n_pred);
        let data = QpData {
            quad_cost: matrix("quad_cost", &doc.quad_cost, n, n)?,
            lin_cost: DVector::from_vec(doc.lin_cost),
            eq_matrix: matrix("eq_matrix", &doc.eq_matrix, m, n)?,
            eq_rhs_base: DVector::from_vec(doc.eq_rhs_base),
            eq_rhs_sensitivity: matrix("eq_rhs_sensitivity", &doc.eq_rhs_sensitivity, m, k)?,
            ineq_matrix: matrix("ineq_matrix", &doc.ineq_matrix, p, n)?,
            ineq_rhs_base: DVector::from_vec(doc.ineq_rhs_base),
            ineq_rhs_sensitivity: matrix("ineq_rhs_sensitivity", &doc.ineq_rhs_sensitivity, p, k)?,
        };
        Ok((ParamQP::new(data)?, doc.row_names))
    }
}
