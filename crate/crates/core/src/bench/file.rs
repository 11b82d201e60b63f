//! JSON problem files.
//!
//! ```json
//! {
//!   "model": { "format": "generic", "m": [[1.0]], "a": [0.375], "b": [[[0.5]]] },
//!   "expected": { "x": [0.5] }
//! }
//! ```
//!
//! Matrices are arrays of rows. Formats and their fields:
//!
//! | format     | fields                                                   |
//! |------------|----------------------------------------------------------|
//! | `generic`  | `m`, `a`, `b` with `b[i][j][k]` the coefficient of `x_i y_j` in entry `k` |
//! | `e1`       | `a`, `b` (as above), optional `normalized` (`M = I`)      |
//! | `e2`       | `p`, `pt`                                                |
//! | `e3`       | `a`, `b`, `c`, `d` for `XCX + B - AX - XD = 0`           |
//! | `e4`       | `a`, `b`, `c` for `X = A + BX + CX^2`                    |
//! | `treelike` | `b`, `a` (list), `d` (list)                              |
//!
//! The optional `expected` block holds a reference solution `x` (vectorized
//! column-major for matrix unknowns) and/or a `supersolution` certificate.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bilinear::DenseTensor;
use crate::error::QveError;
use crate::models::{make_e1, make_e2, make_e3, make_e4, make_treelike};
use crate::problem::QveProblem;
use crate::unilateral::UnilateralProblem;

use super::BenchError;

pub type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Generic {
        m: Rows,
        a: Vec<f64>,
        b: Vec<Rows>,
    },
    E1 {
        a: Vec<f64>,
        b: Vec<Rows>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        normalized: bool,
    },
    E2 {
        p: Rows,
        pt: Rows,
    },
    E3 {
        a: Rows,
        b: Rows,
        c: Rows,
        d: Rows,
    },
    E4 {
        a: Rows,
        b: Rows,
        c: Rows,
    },
    Treelike {
        b: Rows,
        a: Vec<Rows>,
        d: Vec<Rows>,
    },
}

impl ModelSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelSpec::Generic { .. } => "generic",
            ModelSpec::E1 { .. } => "e1",
            ModelSpec::E2 { .. } => "e2",
            ModelSpec::E3 { .. } => "e3",
            ModelSpec::E4 { .. } => "e4",
            ModelSpec::Treelike { .. } => "treelike",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersolution: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Expected>,
}

/// A problem ready for the solvers. `shape` is the matrix shape of the unknown
/// for the matrix-equation formats.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub problem: QveProblem,
    pub unilateral: Option<UnilateralProblem>,
    pub shape: Option<(usize, usize)>,
}

pub fn matrix(what: &'static str, rows: &Rows) -> Result<DMatrix<f64>, QveError> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(QveError::Dimension {
            what,
            expected: c,
            got: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn tensor(b: &[Rows]) -> Result<DenseTensor, QveError> {
    let n = b.len();
    for slab in b {
        if slab.len() != n || slab.iter().any(|r| r.len() != n) {
            return Err(QveError::Invalid(format!("b must be {n}x{n}x{n}")));
        }
    }
    DenseTensor::from_nested(b)
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text: pretty-printed JSON with shortest round-trip numbers
    /// and a trailing newline.
    pub fn to_canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serializes");
        s.push('\n');
        s
    }

    pub fn build(&self) -> Result<Loaded, QveError> {
        let vector = |problem| Loaded {
            problem,
            unilateral: None,
            shape: None,
        };
        Ok(match &self.model {
            ModelSpec::Generic { m, a, b } => vector(QveProblem::new(
                matrix("m", m)?,
                DVector::from_vec(a.clone()),
                tensor(b)?.into_shared(),
            )?),
            ModelSpec::E1 { a, b, normalized } => vector(make_e1(
                DVector::from_vec(a.clone()),
                tensor(b)?.into_shared(),
                *normalized,
            )?),
            ModelSpec::E2 { p, pt } => vector(make_e2(matrix("p", p)?, matrix("pt", pt)?)?.problem),
            ModelSpec::E3 { a, b, c, d } => {
                let e = make_e3(matrix("a", a)?, matrix("b", b)?, matrix("c", c)?, matrix("d", d)?)?;
                Loaded {
                    shape: Some((e.m1, e.m2)),
                    problem: e.problem,
                    unilateral: None,
                }
            }
            ModelSpec::E4 { a, b, c } => {
                let (q, u) = make_e4(matrix("a", a)?, matrix("b", b)?, matrix("c", c)?)?;
                let m = u.dim();
                Loaded {
                    problem: q,
                    unilateral: Some(u),
                    shape: Some((m, m)),
                }
            }
            ModelSpec::Treelike { b, a, d } => {
                let conv = |what, list: &Vec<Rows>| -> Result<Vec<DMatrix<f64>>, QveError> {
                    list.iter().map(|r| matrix(what, r)).collect()
                };
                let t = make_treelike(matrix("b", b)?, conv("a", a)?, conv("d", d)?)?;
                Loaded {
                    shape: Some((t.m, t.m)),
                    problem: t.problem,
                    unilateral: None,
                }
            }
        })
    }
}
