//! Problem and solution file formats.
//!
//! Problems are JSON documents with fields `n`, `m`, `Q` (dense rows or
//! triplet sparse), `q`, `A` (triplet sparse or dense), `C` (a set
//! expression tree, see [`crate::geometry::SetExpr`]) and optional `A_eq`,
//! `b_eq`. Triplet matrices are `{"rows": [...], "cols": [...], "vals":
//! [...]}` with zero-based indices; duplicate entries accumulate.

use crate::alm::{AlmResult, AlmStatus};
use crate::geometry::{SetError, SetExpr};
use crate::problem::{GeoProblem, QuadraticCost};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad matrix data: {0}")]
    Shape(String),
    #[error("bad set expression: {0}")]
    Set(#[from] SetError),
}

/// Dense (row-major nested arrays) or triplet-sparse matrix payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixJson {
    Triplet {
        rows: Vec<usize>,
        cols: Vec<usize>,
        vals: Vec<f64>,
    },
    Dense(Vec<Vec<f64>>),
}

impl MatrixJson {
    pub fn assemble(&self, nrows: usize, ncols: usize) -> Result<DMatrix<f64>, FileError> {
        match self {
            MatrixJson::Dense(data) => {
                if data.len() != nrows {
                    return Err(FileError::Shape(format!(
                        "dense matrix has {} rows, expected {nrows}",
                        data.len()
                    )));
                }
                let mut m = DMatrix::zeros(nrows, ncols);
                for (i, row) in data.iter().enumerate() {
                    if row.len() != ncols {
                        return Err(FileError::Shape(format!(
                            "dense row {i} has {} entries, expected {ncols}",
                            row.len()
                        )));
                    }
                    for (j, &v) in row.iter().enumerate() {
                        m[(i, j)] = v;
                    }
                }
                Ok(m)
            }
            MatrixJson::Triplet { rows, cols, vals } => {
                if rows.len() != cols.len() || rows.len() != vals.len() {
                    return Err(FileError::Shape(format!(
                        "triplet arrays have mismatched lengths {}/{}/{}",
                        rows.len(),
                        cols.len(),
                        vals.len()
                    )));
                }
                let mut m = DMatrix::zeros(nrows, ncols);
                for k in 0..rows.len() {
                    let (i, j) = (rows[k], cols[k]);
                    if i >= nrows || j >= ncols {
                        return Err(FileError::Shape(format!(
                            "triplet entry {k} at ({i}, {j}) outside a {nrows}x{ncols} matrix"
                        )));
                    }
                    m[(i, j)] += vals[k];
                }
                Ok(m)
            }
        }
    }

    pub fn triplet_from(m: &DMatrix<f64>) -> Self {
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if m[(i, j)] != 0.0 {
                    rows.push(i);
                    cols.push(j);
                    vals.push(m[(i, j)]);
                }
            }
        }
        MatrixJson::Triplet { rows, cols, vals }
    }

    pub fn dense_from(m: &DMatrix<f64>) -> Self {
        MatrixJson::Dense(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "Q")]
    pub q_matrix: MatrixJson,
    pub q: Vec<f64>,
    #[serde(rename = "A")]
    pub a: MatrixJson,
    #[serde(rename = "C")]
    pub set: SetExpr,
    #[serde(rename = "A_eq", default, skip_serializing_if = "Option::is_none")]
    pub a_eq: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_eq: Option<Vec<f64>>,
}

impl ProblemJson {
    /// Assembles the in-memory problem. The cost Hessian is kept exactly as
    /// stored so that validation can report asymmetric input.
    pub fn to_problem(&self) -> Result<GeoProblem, FileError> {
        let q_matrix = self.q_matrix.assemble(self.n, self.n)?;
        if self.q.len() != self.n {
            return Err(FileError::Shape(format!(
                "q has length {}, expected {}",
                self.q.len(),
                self.n
            )));
        }
        let a = self.a.assemble(self.m, self.n)?;
        let set = crate::geometry::ConstraintSet::try_from(self.set.clone())?;
        let (a_eq, b_eq) = match (&self.a_eq, &self.b_eq) {
            (Some(a_eq), Some(b_eq)) => {
                let p = b_eq.len();
                (
                    Some(a_eq.assemble(p, self.n)?),
                    Some(DVector::from_row_slice(b_eq)),
                )
            }
            (None, None) => (None, None),
            _ => {
                return Err(FileError::Shape(
                    "A_eq and b_eq must be given together".into(),
                ))
            }
        };
        Ok(GeoProblem::new(
            QuadraticCost::from_raw(q_matrix, DVector::from_row_slice(&self.q)),
            a,
            set,
            a_eq,
            b_eq,
        ))
    }

    pub fn from_problem(p: &GeoProblem) -> Self {
        ProblemJson {
            n: p.n(),
            m: p.m(),
            q_matrix: MatrixJson::dense_from(p.cost.hessian()),
            q: p.cost.linear_term().iter().copied().collect(),
            a: MatrixJson::triplet_from(&p.a),
            set: SetExpr::from(p.set.clone()),
            a_eq: p.a_eq.as_ref().map(MatrixJson::triplet_from),
            b_eq: p.b_eq.as_ref().map(|b| b.iter().copied().collect()),
        }
    }
}

pub fn read_problem(path: &Path) -> Result<GeoProblem, FileError> {
    let text = std::fs::read_to_string(path)?;
    let parsed: ProblemJson = serde_json::from_str(&text)?;
    parsed.to_problem()
}

pub fn write_problem(path: &Path, problem: &GeoProblem) -> Result<(), FileError> {
    let json = ProblemJson::from_problem(problem);
    std::fs::write(path, serde_json::to_string_pretty(&json)?)?;
    Ok(())
}

/// Solution document written by the command-line front end.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionJson {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_eq: Option<Vec<f64>>,
    pub status: AlmStatus,
    pub mu_final: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub elapsed_s: f64,
}

impl SolutionJson {
    pub fn from_result(r: &AlmResult) -> Self {
        SolutionJson {
            x: r.triple.x.iter().copied().collect(),
            z: r.triple.z.iter().copied().collect(),
            y: r.triple.y.iter().copied().collect(),
            y_eq: r.triple.y_eq.as_ref().map(|v| v.iter().copied().collect()),
            status: r.status,
            mu_final: r.mu_final,
            outer_iterations: r.outer_iterations,
            inner_iterations: r.inner_iterations,
            elapsed_s: r.elapsed_s,
        }
    }
}
