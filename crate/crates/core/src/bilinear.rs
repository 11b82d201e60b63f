//! Nonnegative vector bilinear maps `b : R^n x R^n -> R^n`.
//!
//! Every realization answers four questions: the value `b(x, y)`, the matrix
//! of `w -> b(x, w)` ([`BilinearMap::left_matrix`]), the matrix of
//! `w -> b(w, y)` ([`BilinearMap::right_matrix`]) and, through [`swap`], the
//! map with its arguments exchanged. The dense reference realization is
//! [`DenseTensor`]; structured realizations for the matrix equations live in
//! [`crate::models`].

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::compensated::{Acc, AccVec};
use crate::error::{QveError, Result};

/// Shared handle to a bilinear map. Maps are immutable once built.
pub type Bilinear = Arc<dyn BilinearMap>;

pub trait BilinearMap: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// `b(x, y)`.
    fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64>;

    /// Matrix of `w -> b(x, w)`.
    fn left_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            out.set_column(j, &self.apply(x, &unit(n, j)));
        }
        out
    }

    /// Matrix of `w -> b(w, y)`.
    fn right_matrix(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            out.set_column(i, &self.apply(&unit(n, i), y));
        }
        out
    }

    /// `b(x, y)` as a double-double pair. Realizations without a compensated
    /// kernel return the plain value with a zero low part.
    fn apply_compensated(&self, x: &DVector<f64>, y: &DVector<f64>) -> AccVec {
        AccVec::exact(self.apply(x, y))
    }

    /// Diagonal of `w -> b(w, y)` when that matrix is known to be diagonal.
    fn right_diagonal(&self, _y: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    /// The original map if this one is a swapped view.
    fn unswapped(&self) -> Option<Bilinear> {
        None
    }

    /// Dense tensor obtained by probing with canonical basis vectors.
    fn to_dense(&self) -> DenseTensor {
        let n = self.dim();
        let mut t = DenseTensor::zeros(n);
        for i in 0..n {
            let ei = unit(n, i);
            for j in 0..n {
                let v = self.apply(&ei, &unit(n, j));
                for k in 0..n {
                    t.set(i, j, k, v[k]);
                }
            }
        }
        t
    }
}

pub(crate) fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

/// `b~(x, y) = b(y, x)`. Swapping twice returns the original handle.
pub fn swap(b: &Bilinear) -> Bilinear {
    match b.unswapped() {
        Some(inner) => inner,
        None => Arc::new(Swapped { inner: b.clone() }),
    }
}

/// Checks `b(e_i, e_j) >= -tol` for all basis pairs.
pub fn check_nonnegative(b: &dyn BilinearMap, tol: f64) -> Result<()> {
    let n = b.dim();
    for i in 0..n {
        let ei = unit(n, i);
        for j in 0..n {
            let v = b.apply(&ei, &unit(n, j));
            if let Some((k, &val)) = v.iter().enumerate().find(|(_, &v)| v < -tol) {
                return Err(QveError::Negative {
                    what: "bilinear map",
                    index: format!("({i},{j},{k})"),
                    value: val,
                });
            }
        }
    }
    Ok(())
}

/// Dense tensor `B[i][j][k]` with `b(x, y)_k = sum_ij B[i][j][k] x_i y_j`.
///
/// Storage is k-major: slice `k` is the `n x n` matrix `(B[i][j][k])_ij`,
/// stored row-major at offset `k * n * n`.
#[derive(Clone, PartialEq)]
pub struct DenseTensor {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseTensor").field("n", &self.n).finish()
    }
}

impl DenseTensor {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t.set(i, j, k, f(i, j, k));
                }
            }
        }
        t
    }

    /// Builds from nested arrays indexed `b[i][j][k]`, rejecting negative entries.
    pub fn from_nested(b: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n = b.len();
        let mut t = Self::zeros(n);
        for (i, plane) in b.iter().enumerate() {
            crate::error::check_len("tensor plane", n, plane.len())?;
            for (j, row) in plane.iter().enumerate() {
                crate::error::check_len("tensor row", n, row.len())?;
                for (k, &v) in row.iter().enumerate() {
                    if v < 0.0 || !v.is_finite() {
                        return Err(QveError::Negative {
                            what: "tensor",
                            index: format!("[{i}][{j}][{k}]"),
                            value: v,
                        });
                    }
                    t.set(i, j, k, v);
                }
            }
        }
        Ok(t)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| (0..self.n).map(|k| self.get(i, j, k)).collect())
                    .collect()
            })
            .collect()
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n + i) * self.n + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.idx(i, j, k);
        self.data[idx] = v;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Tensor of `b~(x, y) = b(y, x)`.
    pub fn transposed(&self) -> Self {
        Self::from_fn(self.n, |i, j, k| self.get(j, i, k))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn into_shared(self) -> Bilinear {
        Arc::new(self)
    }
}

impl BilinearMap for DenseTensor {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(n, |k, _| {
            let slice = &self.data[k * n * n..(k + 1) * n * n];
            let mut acc = 0.0;
            for i in 0..n {
                if x[i] == 0.0 {
                    continue;
                }
                let row = &slice[i * n..(i + 1) * n];
                let dot: f64 = row.iter().zip(y.iter()).map(|(b, y)| b * y).sum();
                acc += x[i] * dot;
            }
            acc
        })
    }

    fn left_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |k, j| (0..n).map(|i| self.get(i, j, k) * x[i]).sum())
    }

    fn right_matrix(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |k, i| (0..n).map(|j| self.get(i, j, k) * y[j]).sum())
    }

    fn apply_compensated(&self, x: &DVector<f64>, y: &DVector<f64>) -> AccVec {
        let n = self.n;
        let mut out = AccVec::zeros(n);
        for k in 0..n {
            let slice = &self.data[k * n * n..(k + 1) * n * n];
            let mut acc = Acc::default();
            for i in 0..n {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let b = slice[i * n + j];
                    if b != 0.0 {
                        let xy = crate::compensated::two_prod(x[i], y[j]);
                        acc.add_scaled(b, Acc { hi: xy.0, lo: xy.1 });
                    }
                }
            }
            out.hi[k] = acc.hi;
            out.lo[k] = acc.lo;
        }
        out
    }

    fn to_dense(&self) -> DenseTensor {
        self.clone()
    }
}

#[derive(Debug)]
struct Swapped {
    inner: Bilinear,
}

impl BilinearMap for Swapped {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.inner.apply(y, x)
    }
    fn apply_compensated(&self, x: &DVector<f64>, y: &DVector<f64>) -> AccVec {
        self.inner.apply_compensated(y, x)
    }
    fn left_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.inner.right_matrix(x)
    }
    fn right_matrix(&self, y: &DVector<f64>) -> DMatrix<f64> {
        self.inner.left_matrix(y)
    }
    fn unswapped(&self) -> Option<Bilinear> {
        Some(self.inner.clone())
    }
}

/// The zero map on `R^n`.
#[derive(Debug, Clone)]
pub struct ZeroMap {
    pub n: usize,
}

impl BilinearMap for ZeroMap {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, _x: &DVector<f64>, _y: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(self.n)
    }
    fn left_matrix(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.n, self.n)
    }
    fn right_matrix(&self, _y: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::zeros(self.n, self.n)
    }
    fn right_diagonal(&self, _y: &DVector<f64>) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.n))
    }
}

/// `factor * b(x, y)` with `factor >= 0`.
#[derive(Debug, Clone)]
pub struct Scaled {
    inner: Bilinear,
    factor: f64,
}

impl Scaled {
    pub fn new(inner: Bilinear, factor: f64) -> Result<Self> {
        if !(factor >= 0.0) {
            return Err(QveError::Invalid(format!(
                "scale factor must be nonnegative, got {factor}"
            )));
        }
        Ok(Self { inner, factor })
    }
}

impl BilinearMap for Scaled {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.inner.apply(x, y) * self.factor
    }
    fn apply_compensated(&self, x: &DVector<f64>, y: &DVector<f64>) -> AccVec {
        let v = self.inner.apply_compensated(x, y);
        let mut out = AccVec::zeros(v.hi.len());
        for i in 0..v.hi.len() {
            let mut acc = Acc::default();
            acc.add_scaled(self.factor, v.get(i));
            out.hi[i] = acc.hi;
            out.lo[i] = acc.lo;
        }
        out
    }
    fn left_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.inner.left_matrix(x) * self.factor
    }
    fn right_matrix(&self, y: &DVector<f64>) -> DMatrix<f64> {
        self.inner.right_matrix(y) * self.factor
    }
    fn right_diagonal(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        self.inner.right_diagonal(y).map(|d| d * self.factor)
    }
}

/// `T * b(x, y)` for a fixed matrix `T`. Not necessarily nonnegative unless `T >= 0`.
#[derive(Debug, Clone)]
pub struct Premultiplied {
    pub matrix: DMatrix<f64>,
    pub inner: Bilinear,
}

impl BilinearMap for Premultiplied {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        &self.matrix * self.inner.apply(x, y)
    }
    fn left_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        &self.matrix * self.inner.left_matrix(x)
    }
    fn right_matrix(&self, y: &DVector<f64>) -> DMatrix<f64> {
        &self.matrix * self.inner.right_matrix(y)
    }
}

/// `Pi b(Pi^T x, Pi^T y)` where `Pi` keeps the coordinates in `keep`.
#[derive(Debug, Clone)]
pub struct Projected {
    inner: Bilinear,
    keep: Vec<usize>,
}

impl Projected {
    pub fn new(inner: Bilinear, keep: Vec<usize>) -> Self {
        Self { inner, keep }
    }

    fn embed(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut full = DVector::zeros(self.inner.dim());
        for (r, &i) in self.keep.iter().enumerate() {
            full[i] = x[r];
        }
        full
    }

    fn restrict_matrix(&self, full: &DMatrix<f64>) -> DMatrix<f64> {
        let m = self.keep.len();
        DMatrix::from_fn(m, m, |r, c| full[(self.keep[r], self.keep[c])])
    }
}

impl BilinearMap for Projected {
    fn dim(&self) -> usize {
        self.keep.len()
    }
    fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let v = self.inner.apply(&self.embed(x), &self.embed(y));
        DVector::from_iterator(self.keep.len(), self.keep.iter().map(|&i| v[i]))
    }
    fn apply_compensated(&self, x: &DVector<f64>, y: &DVector<f64>) -> AccVec {
        let v = self.inner.apply_compensated(&self.embed(x), &self.embed(y));
        let pick = |w: &DVector<f64>| {
            DVector::from_iterator(self.keep.len(), self.keep.iter().map(|&i| w[i]))
        };
        AccVec {
            hi: pick(&v.hi),
            lo: pick(&v.lo),
        }
    }
    fn left_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.restrict_matrix(&self.inner.left_matrix(&self.embed(x)))
    }
    fn right_matrix(&self, y: &DVector<f64>) -> DMatrix<f64> {
        self.restrict_matrix(&self.inner.right_matrix(&self.embed(y)))
    }
    fn right_diagonal(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        let d = self.inner.right_diagonal(&self.embed(y))?;
        Some(DVector::from_iterator(
            self.keep.len(),
            self.keep.iter().map(|&i| d[i]),
        ))
    }
}
