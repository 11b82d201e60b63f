//! Reference answers that do not share code paths with the production solvers:
//! a slow fixed-point iteration with compensated residuals, closed-form scalar
//! roots and a literal boolean version of the fixed-point iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{QveError, Result};
use crate::problem::QveProblem;

/// Relative threshold on explicit `M^{-1}` entries in [`brute_support`].
pub const INVERSE_THRESHOLD: f64 = 1e-13;
/// Iteration cap for [`oracle_minimal`].
pub const ORACLE_MAXIT: usize = 2_000_000;
const DIVERGENCE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    FixedPointCompensated,
    ScalarClosedForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub x: DVector<f64>,
    pub method: OracleMethod,
    /// Compensated `||F(x)||_inf` at the returned point.
    pub residual_bound: f64,
    pub iterations: usize,
}

/// Minimal solution by `x_{k+1} = M^{-1}(a + b(x_k, x_k))` from `0`, run as
/// `x_{k+1} = x_k - M^{-1} F(x_k)` with `F` in double-double arithmetic, until
/// `||F(x_k)||_inf <= target`.
///
/// Each step is checked to be nondecreasing, so the limit is the minimal
/// solution. Scalar problems are answered in closed form.
pub fn oracle_minimal(p: &QveProblem, target: f64) -> Result<OracleSolution> {
    if p.dim() == 1 {
        let b = p.b().apply(&DVector::from_element(1, 1.0), &DVector::from_element(1, 1.0))[0];
        let m = p.m()[(0, 0)];
        let a = p.a()[0];
        return match scalar_roots(m, a, b) {
            Some(x) => {
                let x = DVector::from_element(1, x);
                let residual_bound = p.residual_accurate(&x)?.amax();
                Ok(OracleSolution {
                    x,
                    method: OracleMethod::ScalarClosedForm,
                    residual_bound,
                    iterations: 0,
                })
            }
            None => Err(QveError::NoSolution(format!(
                "scalar discriminant {m}^2 - 4*{a}*{b} is negative"
            ))),
        };
    }
    let m = p.m_handle();
    let mut x = DVector::zeros(p.dim());
    for k in 0..ORACLE_MAXIT {
        let f = p.residual_accurate(&x)?;
        let res = f.amax();
        if res <= target {
            return Ok(OracleSolution {
                x,
                method: OracleMethod::FixedPointCompensated,
                residual_bound: res,
                iterations: k,
            });
        }
        let step = m.msolve(&(-f))?;
        let drop = -step.min();
        if drop > 1e-14 * (1.0 + x.amax()) {
            return Err(QveError::Invalid(format!(
                "oracle iterate decreased by {drop:e} at step {k}"
            )));
        }
        x += step.map(|v| v.max(0.0));
        if !(x.amax() <= DIVERGENCE_GUARD) {
            return Err(QveError::NoSolution(format!(
                "fixed-point iterate exceeded {DIVERGENCE_GUARD:e} at step {k}"
            )));
        }
    }
    Err(QveError::Invalid(format!(
        "oracle did not reach residual {target:e} in {ORACLE_MAXIT} steps"
    )))
}

/// Smallest nonnegative root of `B x^2 - M x + a = 0`, or `None` when there is
/// no real root. Uses `2a / (M + sqrt(M^2 - 4aB))`, which has no cancellation.
pub fn scalar_roots(m: f64, a: f64, b: f64) -> Option<f64> {
    if !(m > 0.0) || a < 0.0 || b < 0.0 {
        return None;
    }
    let disc = m * m - 4.0 * a * b;
    if disc < 0.0 {
        return None;
    }
    Some(2.0 * a / (m + disc.sqrt()))
}

/// Support of the minimal solution by running the boolean form of the
/// fixed-point iteration, `s <- pat(M^{-1} a) | pat(M^{-1} b(s, s))`, to its
/// fixpoint. `M^{-1}` is formed explicitly and thresholded at
/// [`INVERSE_THRESHOLD`] relative to its largest entry.
pub fn brute_support(p: &QveProblem) -> Result<Vec<usize>> {
    let n = p.dim();
    let inv = p.m_handle().inverse()?;
    let thresh = INVERSE_THRESHOLD * inv.amax();
    let pat: DMatrix<bool> = inv.map(|v| v > thresh);
    let apply = |v: &DVector<f64>| -> Vec<bool> {
        (0..n)
            .map(|i| (0..n).any(|j| pat[(i, j)] && v[j] > 0.0))
            .collect()
    };
    let base = apply(p.a());
    let mut s = base.clone();
    loop {
        let ind = DVector::from_iterator(n, s.iter().map(|&b| if b { 1.0 } else { 0.0 }));
        let grown = apply(&p.b().apply(&ind, &ind));
        let next: Vec<bool> = (0..n).map(|i| base[i] || grown[i]).collect();
        if next == s {
            break;
        }
        s = next;
    }
    Ok((0..n).filter(|&i| s[i]).collect())
}
