//! Constructors for the concrete equation classes: Markovian binary trees,
//! Lu's transport equation, nonsymmetric algebraic Riccati equations, the
//! unilateral equation of quasi-birth-death processes and tree-like processes.
//!
//! Matrix unknowns are vectorized column-major, so `vec(AXB) = (B^T (x) A) vec(X)`.

use nalgebra::{DMatrix, DVector};

use crate::bilinear::{Bilinear, BilinearMap};
use crate::compensated::{matvec, Acc, AccVec};
use crate::error::{check_len, QveError, Result};
use crate::mmatrix::{classify_zmatrix, is_irreducible, solve_general, Classification, CLASSIFY_TOL};
use crate::problem::{QveProblem, SUPERSOLUTION_TOL};
use crate::unilateral::UnilateralProblem;

/// Tolerance for the stochasticity and normalization checks.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Column-major stacking of the columns of `x`.
pub fn vec(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(x: &DVector<f64>, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    check_len("vectorized matrix", rows * cols, x.len())?;
    Ok(DMatrix::from_column_slice(rows, cols, x.as_slice()))
}

fn check_nonneg_matrix(what: &'static str, x: &DMatrix<f64>) -> Result<()> {
    let rows = x.nrows();
    match x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        Some((idx, &v)) => Err(QveError::Negative {
            what,
            index: format!("({}, {})", idx % rows, idx / rows),
            value: v,
        }),
        None => Ok(()),
    }
}

fn check_shape(what: &'static str, x: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    check_len(what, rows, x.nrows())?;
    check_len(what, cols, x.ncols())
}

/// `b(x, y) = vec(sum_t L_t X K_t Y)` with `X, Y` of shape `r x c`,
/// `L_t` of shape `r x r` and `K_t` of shape `c x r`, all nonnegative.
#[derive(Debug, Clone)]
pub struct MatrixQuadraticMap {
    rows: usize,
    cols: usize,
    terms: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl MatrixQuadraticMap {
    pub fn new(rows: usize, cols: usize, terms: Vec<(DMatrix<f64>, DMatrix<f64>)>) -> Result<Self> {
        for (l, k) in &terms {
            check_shape("left factor", l, rows, rows)?;
            check_shape("middle factor", k, cols, rows)?;
            check_nonneg_matrix("left factor", l)?;
            check_nonneg_matrix("middle factor", k)?;
        }
        Ok(Self { rows, cols, terms })
    }

    fn mat(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.rows, self.cols, x.as_slice())
    }

    /// `sum_t L_t X K_t`.
    fn left_factor(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.rows, self.rows);
        for (l, k) in &self.terms {
            acc += l * x * k;
        }
        acc
    }
}

impl BilinearMap for MatrixQuadraticMap {
    fn dim(&self) -> usize {
        self.rows * self.cols
    }

    fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        vec(&(self.left_factor(&self.mat(x)) * self.mat(y)))
    }

    fn apply_compensated(&self, x: &DVector<f64>, y: &DVector<f64>) -> AccVec {
        let (xm, ym) = (self.mat(x), self.mat(y));
        let mut out = vec![Acc::default(); self.dim()];
        for (l, k) in &self.terms {
            let u = dd_product(&DdMatrix::exact(l), &xm);
            let v = dd_product(&u, k);
            let w = dd_product(&v, &ym);
            for (o, (hi, lo)) in out.iter_mut().zip(w.hi.iter().zip(w.lo.iter())) {
                o.add(*hi);
                o.lo += lo;
            }
        }
        AccVec {
            hi: DVector::from_iterator(out.len(), out.iter().map(|a| a.hi)),
            lo: DVector::from_iterator(out.len(), out.iter().map(|a| a.lo)),
        }
    }

    fn left_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::<f64>::identity(self.cols, self.cols).kronecker(&self.left_factor(&self.mat(x)))
    }

    fn right_matrix(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let y = self.mat(y);
        let n = self.dim();
        let mut acc = DMatrix::zeros(n, n);
        for (l, k) in &self.terms {
            acc += (k * &y).transpose().kronecker(l);
        }
        acc
    }
}

/// Matrix held as unevaluated pairs `hi + lo`.
struct DdMatrix {
    hi: DMatrix<f64>,
    lo: DMatrix<f64>,
}

impl DdMatrix {
    fn exact(m: &DMatrix<f64>) -> Self {
        Self {
            hi: m.clone(),
            lo: DMatrix::zeros(m.nrows(), m.ncols()),
        }
    }
}

/// `a * b` with `a` in double-double and `b` in double precision.
fn dd_product(a: &DdMatrix, b: &DMatrix<f64>) -> DdMatrix {
    let (r, c) = (a.hi.nrows(), b.ncols());
    let mut out = DdMatrix {
        hi: DMatrix::zeros(r, c),
        lo: DMatrix::zeros(r, c),
    };
    for i in 0..r {
        for j in 0..c {
            let mut acc = Acc::default();
            for p in 0..b.nrows() {
                acc.add_scaled(b[(p, j)], Acc { hi: a.hi[(i, p)], lo: a.lo[(i, p)] });
            }
            out.hi[(i, j)] = acc.hi;
            out.lo[(i, j)] = acc.lo;
        }
    }
    out
}

/// Markovian binary tree: `x = a + b(x, x)` with `M = I`.
///
/// With `normalized`, checks `a + b(e, e) = e`, which makes `e` a supersolution.
pub fn make_e1(a: DVector<f64>, b: Bilinear, normalized: bool) -> Result<QveProblem> {
    let n = a.len();
    if normalized {
        let e = DVector::from_element(n, 1.0);
        let defect = (&a + b.apply(&e, &e) - &e).amax();
        if defect > STOCHASTIC_TOL {
            return Err(QveError::Invalid(format!(
                "a + b(e, e) = e violated by {defect:e}"
            )));
        }
    }
    QveProblem::new(DMatrix::identity(n, n), a, b)
}

/// `b([u1; v1], [u2; v2]) = [u1 o (P v2); v1 o (P~ u2)]`.
///
/// The matrix of `w -> b(w, x)` is diagonal, so a step of modified Newton
/// costs one matrix-vector product pair plus a diagonal solve.
#[derive(Debug, Clone)]
pub struct LuMap {
    p: DMatrix<f64>,
    pt: DMatrix<f64>,
}

impl LuMap {
    fn m(&self) -> usize {
        self.p.nrows()
    }

    fn coupling(&self, y: &DVector<f64>) -> DVector<f64> {
        let m = self.m();
        let mut d = DVector::zeros(2 * m);
        d.rows_mut(0, m).copy_from(&(&self.p * y.rows(m, m)));
        d.rows_mut(m, m).copy_from(&(&self.pt * y.rows(0, m)));
        d
    }
}

impl BilinearMap for LuMap {
    fn dim(&self) -> usize {
        2 * self.m()
    }

    fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        x.component_mul(&self.coupling(y))
    }

    fn apply_compensated(&self, x: &DVector<f64>, y: &DVector<f64>) -> AccVec {
        let m = self.m();
        let pv = matvec(&self.p, &y.rows(m, m).into_owned());
        let pu = matvec(&self.pt, &y.rows(0, m).into_owned());
        let mut out = AccVec::zeros(2 * m);
        for i in 0..2 * m {
            let c = if i < m { pv.get(i) } else { pu.get(i - m) };
            let mut acc = Acc::default();
            acc.add_scaled(x[i], c);
            out.hi[i] = acc.hi;
            out.lo[i] = acc.lo;
        }
        out
    }

    fn left_matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = self.m();
        let mut out = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                out[(i, m + j)] = x[i] * self.p[(i, j)];
                out[(m + i, j)] = x[m + i] * self.pt[(i, j)];
            }
        }
        out
    }

    fn right_matrix(&self, y: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.coupling(y))
    }

    fn right_diagonal(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        Some(self.coupling(y))
    }
}

/// Lu's equation `u = u o (Pv) + e`, `v = v o (P~u) + e` as a problem in
/// `w = [u; v]` with `M = I` and `a = e`.
#[derive(Debug, Clone)]
pub struct E2Problem {
    pub problem: QveProblem,
    pub p: DMatrix<f64>,
    pub pt: DMatrix<f64>,
}

impl E2Problem {
    pub fn m(&self) -> usize {
        self.p.nrows()
    }

    /// `(u, v)` from `w = [u; v]`.
    pub fn split(&self, w: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let m = self.m();
        (w.rows(0, m).into_owned(), w.rows(m, m).into_owned())
    }
}

pub fn make_e2(p: DMatrix<f64>, pt: DMatrix<f64>) -> Result<E2Problem> {
    let m = p.nrows();
    check_shape("P", &p, m, m)?;
    check_shape("P~", &pt, m, m)?;
    check_nonneg_matrix("P", &p)?;
    check_nonneg_matrix("P~", &pt)?;
    let map = LuMap {
        p: p.clone(),
        pt: pt.clone(),
    };
    let problem = QveProblem::new(
        DMatrix::identity(2 * m, 2 * m),
        DVector::from_element(2 * m, 1.0),
        std::sync::Arc::new(map),
    )?;
    Ok(E2Problem { problem, p, pt })
}

/// Synthetic family shaped like the transport model: midpoint nodes
/// `w_i = (i + 1/2)/m` with weights `1/m`, `delta_i = 1/(c w_i (1 + alpha))`,
/// `delta~_i = 1/(c w_i (1 - alpha))`, `q_i = 1/(2 m w_i)`, and
/// `P_ij = q_j / (delta_i + delta~_j)`, `P~_ij = q_j / (delta~_i + delta_j)`.
///
/// `c -> 1` with `alpha = 0` approaches the critical case.
pub fn lu_family(m: usize, alpha: f64, c: f64) -> Result<E2Problem> {
    if m == 0 || !(0.0..1.0).contains(&alpha) || !(c > 0.0 && c <= 1.0) {
        return Err(QveError::Invalid(format!(
            "need m >= 1, 0 <= alpha < 1, 0 < c <= 1 (m={m}, alpha={alpha}, c={c})"
        )));
    }
    let w: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
    let delta: Vec<f64> = w.iter().map(|wi| 1.0 / (c * wi * (1.0 + alpha))).collect();
    let delta_t: Vec<f64> = w.iter().map(|wi| 1.0 / (c * wi * (1.0 - alpha))).collect();
    let q: Vec<f64> = w.iter().map(|wi| 1.0 / (2.0 * m as f64 * wi)).collect();
    let p = DMatrix::from_fn(m, m, |i, j| q[j] / (delta[i] + delta_t[j]));
    let pt = DMatrix::from_fn(m, m, |i, j| q[j] / (delta_t[i] + delta[j]));
    make_e2(p, pt)
}

/// Nonsymmetric algebraic Riccati equation `XCX + B - AX - XD = 0` with `X`
/// of shape `m1 x m2`, vectorized as `(I (x) A + D^T (x) I) x = vec(B) + vec(XCX)`.
#[derive(Debug, Clone)]
pub struct E3Problem {
    pub problem: QveProblem,
    pub m1: usize,
    pub m2: usize,
    /// Set when the block matrix is a singular irreducible M-matrix.
    pub critical: bool,
}

impl E3Problem {
    pub fn unvec(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        unvec(x, self.m1, self.m2)
    }
}

/// Residual `XCX + B - AX - XD` of the matrix form.
pub fn nare_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> DMatrix<f64> {
    x * c * x + b - a * x - x * d
}

/// `A` is `m1 x m1`, `B` is `m1 x m2`, `C` is `m2 x m1`, `D` is `m2 x m2`, and
/// `[[D, -C], [-B, A]]` must be a nonsingular M-matrix or a singular
/// irreducible one.
pub fn make_e3(
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
) -> Result<E3Problem> {
    let m1 = a.nrows();
    let m2 = d.nrows();
    check_shape("A", &a, m1, m1)?;
    check_shape("B", &b, m1, m2)?;
    check_shape("C", &c, m2, m1)?;
    check_shape("D", &d, m2, m2)?;
    check_nonneg_matrix("B", &b)?;
    check_nonneg_matrix("C", &c)?;
    let n = m1 + m2;
    let mut big = DMatrix::zeros(n, n);
    big.view_mut((0, 0), (m2, m2)).copy_from(&d);
    big.view_mut((0, m2), (m2, m1)).copy_from(&(-&c));
    big.view_mut((m2, 0), (m1, m2)).copy_from(&(-&b));
    big.view_mut((m2, m2), (m1, m1)).copy_from(&a);
    let critical = match classify_zmatrix(&big, CLASSIFY_TOL)? {
        Classification::NonsingularM => false,
        Classification::SingularM => {
            let offdiag = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { -big[(i, j)] });
            if !is_irreducible(&offdiag) {
                return Err(QveError::NotMMatrix(
                    "block matrix is a reducible singular M-matrix".into(),
                ));
            }
            true
        }
        Classification::NotM => {
            return Err(QveError::NotMMatrix("block matrix [[D, -C], [-B, A]]".into()))
        }
    };
    let m = DMatrix::<f64>::identity(m2, m2).kronecker(&a)
        + d.transpose().kronecker(&DMatrix::<f64>::identity(m1, m1));
    let map = MatrixQuadraticMap::new(m1, m2, vec![(DMatrix::identity(m1, m1), c)])?;
    let mut problem = QveProblem::new(m, vec(&b), std::sync::Arc::new(map))?;
    if critical {
        problem = problem.with_warning(
            "singular irreducible block matrix: critical case, convergence may be linear",
        );
    }
    Ok(E3Problem {
        problem,
        m1,
        m2,
        critical,
    })
}

/// `X = A + BX + CX^2`, both vectorized (`M = I (x) (I - B)`, `a = vec(A)`,
/// `b(x, y) = vec(C X Y)`) and in native form.
pub fn make_e4(
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
) -> Result<(QveProblem, UnilateralProblem)> {
    let uni = UnilateralProblem::new(a.clone(), b.clone(), c.clone())?;
    let m = a.nrows();
    let id = DMatrix::<f64>::identity(m, m);
    let mm = id.kronecker(&(&id - &b));
    let map = MatrixQuadraticMap::new(m, m, vec![(c, id)])?;
    let qve = QveProblem::new(mm, vec(&a), std::sync::Arc::new(map))?;
    Ok((qve, uni))
}

/// Tree-like process in the variable `Y = -X^{-1}`:
/// `(I - B) Y = I + sum_i A_i Y D_i Y`.
#[derive(Debug, Clone)]
pub struct TreeLikeProblem {
    pub problem: QveProblem,
    pub m: usize,
}

impl TreeLikeProblem {
    /// `(X, T) = (-Y^{-1}, X + I)` from the vectorized minimal `Y`.
    pub fn convert(&self, y: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let y = unvec(y, self.m, self.m)?;
        let id = DMatrix::<f64>::identity(self.m, self.m);
        let x = -solve_general(&y, &id)?;
        let t = &x + &id;
        Ok((x, t))
    }
}

pub fn make_treelike(
    b: DMatrix<f64>,
    a: Vec<DMatrix<f64>>,
    d: Vec<DMatrix<f64>>,
) -> Result<TreeLikeProblem> {
    let m = b.nrows();
    check_shape("B", &b, m, m)?;
    check_nonneg_matrix("B", &b)?;
    if a.len() != d.len() || a.is_empty() {
        return Err(QveError::Invalid(format!(
            "need matching nonempty A_i and D_i lists (got {} and {})",
            a.len(),
            d.len()
        )));
    }
    for (ai, di) in a.iter().zip(&d) {
        check_shape("A_i", ai, m, m)?;
        check_shape("D_i", di, m, m)?;
        check_nonneg_matrix("A_i", ai)?;
        check_nonneg_matrix("D_i", di)?;
    }
    let sum_a = a.iter().fold(DMatrix::zeros(m, m), |acc, ai| acc + ai);
    for (j, dj) in d.iter().enumerate() {
        let rows = (&b + dj + &sum_a).column_sum();
        let defect = rows.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        if defect > STOCHASTIC_TOL {
            return Err(QveError::Invalid(format!(
                "B + D_{} + sum A_i is not stochastic (row-sum defect {defect:e})",
                j + 1
            )));
        }
    }
    let id = DMatrix::<f64>::identity(m, m);
    let mm = id.kronecker(&(&id - &b));
    let map = MatrixQuadraticMap::new(m, m, a.into_iter().zip(d).collect())?;
    let problem = QveProblem::new(mm, vec(&id), std::sync::Arc::new(map))?;
    Ok(TreeLikeProblem { problem, m })
}

/// Whether `e` certifies existence, as it does for a normalized tree.
pub fn e_is_supersolution(p: &QveProblem) -> Result<bool> {
    p.check_supersolution(&DVector::from_element(p.dim(), 1.0), SUPERSOLUTION_TOL)
}
