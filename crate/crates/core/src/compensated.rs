//! Error-free transformations and double-double accumulation.
//!
//! Used to evaluate residuals near double roots, where `F(x)` is much smaller
//! than the terms that make it up and plain summation loses every digit.

use nalgebra::{DMatrix, DVector};

/// `a + b = s + e` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// `a * b = p + e` exactly (barring underflow).
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Running sum kept as an unevaluated pair `hi + lo`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Acc {
    pub hi: f64,
    pub lo: f64,
}

impl Acc {
    pub fn add(&mut self, v: f64) {
        let (s, e) = two_sum(self.hi, v);
        self.hi = s;
        self.lo += e;
    }

    /// Adds `a * b` with the product's rounding error.
    pub fn add_prod(&mut self, a: f64, b: f64) {
        let (p, e) = two_prod(a, b);
        self.add(p);
        self.lo += e;
    }

    /// Adds `c * (hi + lo)`.
    pub fn add_scaled(&mut self, c: f64, v: Acc) {
        self.add_prod(c, v.hi);
        self.lo += c * v.lo;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

/// Componentwise pairs for vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct AccVec {
    pub hi: DVector<f64>,
    pub lo: DVector<f64>,
}

impl AccVec {
    pub fn zeros(n: usize) -> Self {
        Self {
            hi: DVector::zeros(n),
            lo: DVector::zeros(n),
        }
    }

    pub fn exact(v: DVector<f64>) -> Self {
        let n = v.len();
        Self {
            hi: v,
            lo: DVector::zeros(n),
        }
    }

    pub fn get(&self, i: usize) -> Acc {
        Acc {
            hi: self.hi[i],
            lo: self.lo[i],
        }
    }

    pub fn value(&self) -> DVector<f64> {
        &self.hi + &self.lo
    }
}

/// `m * x` with compensated dot products.
pub fn matvec(m: &DMatrix<f64>, x: &DVector<f64>) -> AccVec {
    let mut out = AccVec::zeros(m.nrows());
    for i in 0..m.nrows() {
        let mut acc = Acc::default();
        for j in 0..m.ncols() {
            acc.add_prod(m[(i, j)], x[j]);
        }
        out.hi[i] = acc.hi;
        out.lo[i] = acc.lo;
    }
    out
}
