//! M-matrix predicates, factorization-backed solves and Perron root estimates.
//!
//! A Z-matrix `Z` is written as `sI - P` with `s = max(max_i Z_ii, 0) + 1`,
//! so that `P >= 0` has a strictly positive diagonal. `Z` is a nonsingular
//! M-matrix iff `rho(P) < s`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{QveError, Result};

/// Default relative tolerance for [`classify_zmatrix`].
pub const CLASSIFY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    NonsingularM,
    SingularM,
    NotM,
}

/// Fails on the first positive off-diagonal entry. The test is exact.
pub fn check_zmatrix(z: &DMatrix<f64>) -> Result<()> {
    if !z.is_square() {
        return Err(QveError::Dimension {
            what: "square matrix columns",
            expected: z.nrows(),
            got: z.ncols(),
        });
    }
    for j in 0..z.ncols() {
        for i in 0..z.nrows() {
            let v = z[(i, j)];
            if !v.is_finite() || (i != j && v > 0.0) {
                return Err(QveError::NotZMatrix { i, j, value: v });
            }
        }
    }
    Ok(())
}

/// Result of a power iteration on a nonnegative matrix.
///
/// `lower` and `upper` are Collatz-Wielandt bounds from the final vector and
/// always bracket the true spectral radius. `value` is the norm-growth
/// estimate; on reducible inputs it may sit below the true radius until the
/// dominant block takes over, so treat it as biased low there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration for `rho(P)` with `P >= 0`, started from the all-ones vector.
///
/// The iteration runs on `P + cI` with `c = ||P||_inf / 2`, which makes any
/// irreducible `P` primitive without moving the Perron root relative to the
/// rest of the spectrum. Stops when `|l_{k+1} - l_k| <= tol * |l_k|`.
pub fn spectral_radius(p: &DMatrix<f64>, tol: f64, maxit: usize) -> SpectralEstimate {
    let n = p.nrows();
    let norm = (0..n)
        .map(|i| p.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if n == 0 || norm == 0.0 {
        return SpectralEstimate {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let shift = norm / 2.0;
    let mut v = DVector::from_element(n, 1.0);
    let mut prev = f64::NAN;
    let mut est = SpectralEstimate {
        value: 0.0,
        lower: 0.0,
        upper: f64::INFINITY,
        iterations: 0,
        converged: false,
    };
    for it in 1..=maxit.max(1) {
        let w = p * &v + &v * shift;
        let (lo, hi) = collatz_bounds(&v, &w);
        est.lower = est.lower.max(lo - shift);
        est.upper = est.upper.min(hi - shift);
        let growth = w.amax();
        let value = growth - shift;
        v = w / growth;
        est.value = value;
        est.iterations = it;
        if (value - prev).abs() <= tol * value.abs().max(f64::MIN_POSITIVE)
            || est.upper - est.lower <= tol * est.upper.abs()
        {
            est.converged = true;
            break;
        }
        prev = value;
    }
    est.value = est.value.clamp(est.lower, est.upper.max(est.lower));
    est
}

fn collatz_bounds(v: &DVector<f64>, w: &DVector<f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (wi, vi) in w.iter().zip(v.iter()) {
        let r = wi / vi;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

/// Classifies a Z-matrix as a nonsingular M-matrix, a singular M-matrix or neither.
///
/// With `s` and `P` as in the module docs: nonsingular if `rho(P) < s(1-tol)`,
/// singular if `|rho(P) - s| <= s tol`, otherwise not an M-matrix. Decisions are
/// taken from Collatz-Wielandt brackets on `rho(P)`, first from inverse
/// iteration with `Z` (when it factors and the iterates stay positive), then
/// from plain power iteration on `P`.
pub fn classify_zmatrix(z: &DMatrix<f64>, tol: f64) -> Result<Classification> {
    check_zmatrix(z)?;
    let lu = z.clone().lu();
    Ok(classify_factored(z, &lu, tol))
}

fn classify_factored(z: &DMatrix<f64>, lu: &LU<f64, Dyn, Dyn>, tol: f64) -> Classification {
    let n = z.nrows();
    if n == 0 {
        return Classification::NonsingularM;
    }
    let s = (0..n).map(|i| z[(i, i)]).fold(0.0, f64::max) + 1.0;
    let p = DMatrix::identity(n, n) * s - z;
    let decide = |lo: f64, hi: f64| -> Option<Classification> {
        if hi < s * (1.0 - tol) {
            Some(Classification::NonsingularM)
        } else if lo > s * (1.0 + tol) {
            Some(Classification::NotM)
        } else if lo >= s * (1.0 - tol) && hi <= s * (1.0 + tol) {
            Some(Classification::SingularM)
        } else {
            None
        }
    };

    if zero_pivot(lu).is_none() {
        let mut v = DVector::from_element(n, 1.0);
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for _ in 0..32 {
            let Some(w) = lu.solve(&v) else { break };
            if !w.iter().all(|x| x.is_finite() && *x > 0.0) {
                break;
            }
            v = &w / w.amax();
            let (l, h) = collatz_bounds(&v, &(&p * &v));
            lo = lo.max(l);
            hi = hi.min(h);
            if let Some(c) = decide(lo, hi) {
                return c;
            }
        }
    }

    let est = spectral_radius(&p, tol * 1e-2, 20_000);
    if let Some(c) = decide(est.lower, est.upper) {
        return c;
    }
    let rho = est.value;
    if rho < s * (1.0 - tol) {
        Classification::NonsingularM
    } else if rho > s * (1.0 + tol) {
        Classification::NotM
    } else {
        Classification::SingularM
    }
}

/// Index of the first pivot of `U` that is zero relative to `n eps max|U|`.
fn zero_pivot(lu: &LU<f64, Dyn, Dyn>) -> Option<usize> {
    let u = lu.u();
    let n = u.nrows();
    let scale = u.amax();
    let thresh = n as f64 * f64::EPSILON * scale;
    (0..n).find(|&i| !(u[(i, i)].abs() > thresh))
}

/// A classified Z-matrix together with its LU factorization (row pivoting).
#[derive(Clone, Debug)]
pub struct MMatrixHandle {
    z: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    classification: Classification,
    pivot: Option<usize>,
}

impl MMatrixHandle {
    pub fn new(z: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_zmatrix(&z)?;
        let lu = z.clone().lu();
        let classification = classify_factored(&z, &lu, tol);
        let pivot = zero_pivot(&lu);
        Ok(Self {
            z,
            lu,
            classification,
            pivot,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn dim(&self) -> usize {
        self.z.nrows()
    }

    /// Whether solves are possible: a factorization without zero pivots and
    /// not classified as outside the M-matrix class.
    pub fn is_solvable(&self) -> bool {
        self.pivot.is_none() && self.classification != Classification::NotM
    }

    /// `Z^{-1} v`.
    pub fn msolve(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        crate::error::check_len("right-hand side", self.dim(), v.len())?;
        self.ensure_solvable()?;
        self.lu
            .solve(v)
            .ok_or(QveError::SingularFactorization { pivot: 0 })
    }

    /// `Z^{-1} B` for a matrix right-hand side.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        crate::error::check_len("right-hand side rows", self.dim(), b.nrows())?;
        self.ensure_solvable()?;
        self.lu
            .solve(b)
            .ok_or(QveError::SingularFactorization { pivot: 0 })
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        self.solve_matrix(&DMatrix::identity(self.dim(), self.dim()))
    }

    fn ensure_solvable(&self) -> Result<()> {
        if let Some(pivot) = self.pivot {
            return Err(QveError::SingularFactorization { pivot });
        }
        if self.classification == Classification::NotM {
            return Err(QveError::NotMMatrix("classified as not an M-matrix".into()));
        }
        Ok(())
    }
}

/// Sets to zero positive off-diagonal entries below `tol * (1 + max|Z|)`;
/// these come from roundoff in products that are nonnegative in exact arithmetic.
pub(crate) fn clean_zmatrix(z: &mut DMatrix<f64>, tol: f64) {
    let thresh = tol * (1.0 + z.amax());
    let n = z.nrows();
    for j in 0..n {
        for i in 0..n {
            if i != j && z[(i, j)] > 0.0 && z[(i, j)] <= thresh {
                z[(i, j)] = 0.0;
            }
        }
    }
}

/// Solve with a general square matrix (no M-matrix requirement), reporting the
/// first zero pivot on failure.
pub fn solve_general(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let lu = a.clone().lu();
    if let Some(pivot) = zero_pivot(&lu) {
        return Err(QveError::SingularFactorization { pivot });
    }
    lu.solve(b)
        .ok_or(QveError::SingularFactorization { pivot: 0 })
}

/// Strong connectivity of the directed graph of nonzero off-diagonal entries.
pub fn is_irreducible(p: &DMatrix<f64>) -> bool {
    let n = p.nrows();
    if n <= 1 {
        return true;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                let v = if forward { p[(i, j)] } else { p[(j, i)] };
                if i != j && v != 0.0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Nonzero pattern of `Z^{-1}` for a nonsingular M-matrix `Z`.
///
/// `(Z^{-1})_ij > 0` iff `j` is reachable from `i` (or `i = j`) in the graph of
/// nonzero off-diagonal entries of `Z`, since `Z^{-1} = sum_k (D^{-1} N)^k D^{-1}`
/// with `D = diag(Z)` and `N = D - Z >= 0`. No floating comparisons are involved.
pub fn inverse_pattern(z: &DMatrix<f64>) -> Vec<Vec<bool>> {
    let n = z.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && z[(i, j)] != 0.0).collect())
        .collect();
    (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for &j in &adj[i] {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            seen
        })
        .collect()
}
