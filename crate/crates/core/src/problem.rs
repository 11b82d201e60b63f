//! The quadratic vector equation `Mx = a + b(x, x)` and its residual map
//! `F(x) = Mx - a - b(x, x)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bilinear::{self, Bilinear};
use crate::error::{check_len, QveError, Result};
use crate::mmatrix::{Classification, MMatrixHandle, CLASSIFY_TOL};

/// Absolute tolerance for sign checks on exact identities.
pub const SIGN_TOL: f64 = 1e-13;
/// Default tolerance for [`QveProblem::check_supersolution`].
pub const SUPERSOLUTION_TOL: f64 = 1e-9;

/// A validated problem `(M, a, b)`.
///
/// Construction checks that `M` is a Z-matrix (exactly), that it classifies as
/// an M-matrix, that `a >= 0` and that `b` is nonnegative on basis probes.
/// Near-singular `M` (classified singular but factorizable) is accepted and
/// recorded in [`QveProblem::warnings`].
#[derive(Clone, Debug)]
pub struct QveProblem {
    m: MMatrixHandle,
    a: DVector<f64>,
    b: Bilinear,
    warnings: Vec<String>,
}

impl QveProblem {
    pub fn new(m: DMatrix<f64>, a: DVector<f64>, b: Bilinear) -> Result<Self> {
        let n = a.len();
        check_len("M rows", n, m.nrows())?;
        check_len("M columns", n, m.ncols())?;
        check_len("bilinear map dimension", n, b.dim())?;
        if let Some((i, &v)) = a.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(QveError::Negative {
                what: "a",
                index: i.to_string(),
                value: v,
            });
        }
        bilinear::check_nonnegative(b.as_ref(), 0.0)?;
        let handle = MMatrixHandle::new(m, CLASSIFY_TOL)?;
        let mut warnings = Vec::new();
        match handle.classification() {
            Classification::NonsingularM => {}
            Classification::SingularM if handle.is_solvable() => warnings.push(
                "M is numerically singular; convergence may degrade to linear".to_string(),
            ),
            Classification::SingularM => {
                return Err(QveError::NotMMatrix("M is a singular M-matrix".into()))
            }
            Classification::NotM => {
                return Err(QveError::NotMMatrix("M fails the M-matrix test".into()))
            }
        }
        Ok(Self {
            m: handle,
            a,
            b,
            warnings,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn m(&self) -> &DMatrix<f64> {
        self.m.matrix()
    }

    pub fn m_handle(&self) -> &MMatrixHandle {
        &self.m
    }

    pub fn a(&self) -> &DVector<f64> {
        &self.a
    }

    pub fn b(&self) -> &Bilinear {
        &self.b
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Same equation with the bilinear form `b~(x, y) = b(y, x)`.
    pub fn with_swapped_form(&self) -> Self {
        Self {
            m: self.m.clone(),
            a: self.a.clone(),
            b: bilinear::swap(&self.b),
            warnings: self.warnings.clone(),
        }
    }

    /// Same `M` and `a` with another bilinear form of the same dimension.
    pub fn with_form(&self, b: Bilinear) -> Result<Self> {
        check_len("bilinear map dimension", self.dim(), b.dim())?;
        bilinear::check_nonnegative(b.as_ref(), 0.0)?;
        Ok(Self {
            m: self.m.clone(),
            a: self.a.clone(),
            b,
            warnings: self.warnings.clone(),
        })
    }

    /// Attaches a diagnostic that solvers copy into their reports.
    pub fn with_warning(mut self, msg: &str) -> Self {
        self.warnings.push(msg.to_string());
        self
    }

    /// `F(x) = Mx - a - b(x, x)`.
    pub fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("x", self.dim(), x.len())?;
        Ok(self.m() * x - &self.a - self.b.apply(x, x))
    }

    /// `F(x)` evaluated in double-double arithmetic and rounded once. Accurate
    /// to a few ulps of `F(x)` itself when the map has a compensated kernel,
    /// which is what resolves iterates closer than `sqrt(eps)` to a double root.
    pub fn residual_accurate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_len("x", self.dim(), x.len())?;
        let mx = crate::compensated::matvec(self.m(), x);
        let bxx = self.b.apply_compensated(x, x);
        Ok(DVector::from_fn(self.dim(), |i, _| {
            let mut acc = mx.get(i);
            acc.add(-self.a[i]);
            acc.add(-bxx.hi[i]);
            acc.lo -= bxx.lo[i];
            acc.value()
        }))
    }

    /// `F'_x = M - b(x, .) - b(., x)`.
    pub fn derivative(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_len("x", self.dim(), x.len())?;
        Ok(self.m() - self.b.left_matrix(x) - self.b.right_matrix(x))
    }

    /// Max-norm of `F(y) - [F(x) + F'_x (y - x) - b(y - x, y - x)]`.
    ///
    /// The expansion is exact for quadratic maps, so the result is pure roundoff.
    pub fn taylor_check(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        check_len("y", self.dim(), y.len())?;
        let d = y - x;
        let model = self.residual(x)? + self.derivative(x)? * &d - self.b.apply(&d, &d);
        Ok((self.residual(y)? - model).amax())
    }

    /// True iff `F(y) >= -tol` componentwise. A `true` answer certifies that a
    /// minimal solution exists and lies below `y`.
    pub fn check_supersolution(&self, y: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self.residual(y)?.iter().all(|&v| v >= -tol))
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }
}

/// A vector `y >= 0` with `F(y) >= 0`, checked at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct SupersolutionCertificate {
    y: DVector<f64>,
}

impl SupersolutionCertificate {
    pub fn new(p: &QveProblem, y: DVector<f64>, tol: f64) -> Result<Self> {
        if y.iter().any(|&v| v < 0.0) {
            return Err(QveError::Invalid("supersolution must be nonnegative".into()));
        }
        let r = p.residual(&y)?;
        let worst = r.min();
        if worst < -tol {
            return Err(QveError::Invalid(format!(
                "F(y) has a negative entry {worst:e}; not a supersolution"
            )));
        }
        Ok(Self { y })
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }
}
