//! Functional iterations `(N - b1(., x_k)) x_{k+1} = a + P x_k + b2(x_k, x_k)`.
//!
//! Every member of the family is parameterized by a [`Splitting`]: `M = N - P`
//! with `N` a nonsingular M-matrix and `P >= 0`, and `b = b1 + b2` with both
//! parts nonnegative. Started from `x_0 = 0` (or any `0 <= x_0` with
//! `F(x_0) <= 0`), the iterates increase monotonically to the minimal solution.
//! The choice `b2 = 0, P = 0` dominates every other splitting of the same
//! bilinear form step by step.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::bilinear::{self, Bilinear, DenseTensor, Scaled, ZeroMap};
use crate::error::{check_len, QveError, Result};
use crate::mmatrix::{check_zmatrix, Classification, MMatrixHandle, CLASSIFY_TOL};
use crate::problem::QveProblem;
use crate::report::{drive, Breakdown, Checks, SolveOptions, SolveReport, StepContext, Stepper};

const SPLIT_TOL: f64 = 1e-12;

/// `M = N - P`, `b = b1 + b2`.
#[derive(Clone, Debug)]
pub struct Splitting {
    n: DMatrix<f64>,
    p: DMatrix<f64>,
    b1: Bilinear,
    b2: Bilinear,
    n_diagonal: bool,
}

impl Splitting {
    /// Validates the splitting against `problem`.
    ///
    /// `b1 + b2` is compared with `b` as quadratic forms, i.e. on the symmetric
    /// probes `b(e_i, e_j) + b(e_j, e_i)`, so `b1` may come from the swapped
    /// form of `b`.
    pub fn new(
        problem: &QveProblem,
        n: DMatrix<f64>,
        p: DMatrix<f64>,
        b1: Bilinear,
        b2: Bilinear,
    ) -> Result<Self> {
        let dim = problem.dim();
        check_len("N rows", dim, n.nrows())?;
        check_len("P rows", dim, p.nrows())?;
        check_len("b1 dimension", dim, b1.dim())?;
        check_len("b2 dimension", dim, b2.dim())?;
        check_zmatrix(&n)?;
        if let Some((idx, &v)) = p.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(QveError::Negative {
                what: "P",
                index: format!("({},{})", idx % dim, idx / dim),
                value: v,
            });
        }
        let scale = 1.0 + problem.m().amax();
        let defect = (&n - &p - problem.m()).amax();
        if defect > SPLIT_TOL * scale {
            return Err(QveError::Invalid(format!(
                "M != N - P (max defect {defect:e})"
            )));
        }
        let nh = MMatrixHandle::new(n.clone(), CLASSIFY_TOL)?;
        if nh.classification() != Classification::NonsingularM {
            return Err(QveError::NotMMatrix(
                "N must be a nonsingular M-matrix".into(),
            ));
        }
        bilinear::check_nonnegative(b1.as_ref(), 0.0)?;
        bilinear::check_nonnegative(b2.as_ref(), 0.0)?;
        let sum = symmetrized(&b1.to_dense(), &b2.to_dense());
        let target = symmetrized(&problem.b().to_dense(), &DenseTensor::zeros(dim));
        let defect = sum.max_abs_diff(&target);
        if defect > SPLIT_TOL * (1.0 + target.max_abs()) {
            return Err(QveError::Invalid(format!(
                "b1 + b2 does not reproduce b(x, x) (max defect {defect:e})"
            )));
        }
        let n_diagonal = (0..dim).all(|i| (0..dim).all(|j| i == j || n[(i, j)] == 0.0));
        Ok(Self {
            n,
            p,
            b1,
            b2,
            n_diagonal,
        })
    }

    /// Builds the splitting described by `spec` for `problem`.
    pub fn from_spec(problem: &QveProblem, spec: &SplittingSpec) -> Result<Self> {
        let dim = problem.dim();
        let b = problem.b().clone();
        let zero: Bilinear = Arc::new(ZeroMap { n: dim });
        let (b1, b2): (Bilinear, Bilinear) = match spec.form {
            FormSplit::Depth => (zero, b),
            FormSplit::Order => (b, zero),
            FormSplit::OrderSwapped => (bilinear::swap(&b), zero),
            FormSplit::Blend(theta) => {
                if !(0.0..=1.0).contains(&theta) {
                    return Err(QveError::Invalid(format!(
                        "blend weight must lie in [0, 1], got {theta}"
                    )));
                }
                (
                    Arc::new(Scaled::new(b.clone(), theta)?),
                    Arc::new(Scaled::new(b, 1.0 - theta)?),
                )
            }
        };
        let m = problem.m().clone();
        let (n, p) = match spec.matrix {
            MatrixSplit::Full => (m, DMatrix::zeros(dim, dim)),
            MatrixSplit::Jacobi => {
                let d = DMatrix::from_diagonal(&m.diagonal());
                let p = &d - &m;
                (d, p)
            }
        };
        Self::new(problem, n, p, b1, b2)
    }

    pub fn n(&self) -> &DMatrix<f64> {
        &self.n
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn b1(&self) -> &Bilinear {
        &self.b1
    }

    pub fn b2(&self) -> &Bilinear {
        &self.b2
    }

    /// `J(x) = N - b1(., x)`.
    pub fn j(&self, x: &DVector<f64>) -> DMatrix<f64> {
        &self.n - self.b1.right_matrix(x)
    }

    /// `g(x) = a + P x + b2(x, x)`.
    pub fn g(&self, problem: &QveProblem, x: &DVector<f64>) -> DVector<f64> {
        problem.a() + &self.p * x + self.b2.apply(x, x)
    }

    /// One application of the iteration map `J(z)^{-1} g(z)`.
    fn map(
        &self,
        problem: &QveProblem,
        z: &DVector<f64>,
        ctx: &mut StepContext,
    ) -> std::result::Result<DVector<f64>, Breakdown> {
        let g = self.g(problem, z);
        if self.n_diagonal {
            if let Some(d) = self.b1.right_diagonal(z) {
                let diag = self.n.diagonal() - d;
                return solve_diagonal(&diag, &g, ctx);
            }
        }
        solve_zmatrix(self.j(z), &g, ctx)
    }
}

fn symmetrized(b1: &DenseTensor, b2: &DenseTensor) -> DenseTensor {
    DenseTensor::from_fn(b1.n(), |i, j, k| {
        b1.get(i, j, k) + b1.get(j, i, k) + b2.get(i, j, k) + b2.get(j, i, k)
    })
}

/// Solves `J y = rhs` for a Z-matrix `J`, mapping failures of the M-matrix
/// property onto breakdowns. Numerically singular but factorizable matrices
/// are used with a warning.
pub(crate) fn solve_zmatrix(
    j: DMatrix<f64>,
    rhs: &DVector<f64>,
    ctx: &mut StepContext,
) -> std::result::Result<DVector<f64>, Breakdown> {
    let h = MMatrixHandle::new(j, CLASSIFY_TOL)?;
    match h.classification() {
        Classification::NotM => return Err(Breakdown::NotM),
        Classification::SingularM if !h.is_solvable() => return Err(Breakdown::Singular),
        Classification::SingularM => ctx.warn_once("near-singular M-matrix inverted"),
        Classification::NonsingularM => {}
    }
    Ok(h.msolve(rhs)?)
}

pub(crate) fn solve_diagonal(
    diag: &DVector<f64>,
    rhs: &DVector<f64>,
    ctx: &mut StepContext,
) -> std::result::Result<DVector<f64>, Breakdown> {
    let scale = diag.amax();
    for &d in diag.iter() {
        if d < -CLASSIFY_TOL * scale {
            return Err(Breakdown::NotM);
        }
        if d == 0.0 {
            return Err(Breakdown::Singular);
        }
        if d <= CLASSIFY_TOL * scale {
            ctx.warn_once("near-singular M-matrix inverted");
        }
    }
    Ok(rhs.component_div(diag))
}

/// Which part of `b` goes into the implicit term `b1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FormSplit {
    /// `b1 = 0`, `b2 = b`.
    Depth,
    /// `b1 = b`, `b2 = 0`.
    Order,
    /// `b1 = b~` (arguments swapped), `b2 = 0`.
    OrderSwapped,
    /// `b1 = t b`, `b2 = (1 - t) b`.
    Blend(f64),
}

/// How `M` is split into `N - P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixSplit {
    /// `N = M`, `P = 0`.
    Full,
    /// `N = diag(M)`, `P = diag(M) - M`.
    Jacobi,
}

/// Textual splitting descriptor, e.g. `order`, `order-swap`, `depth`,
/// `blend:0.25`, each optionally followed by `+jacobi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingSpec {
    pub form: FormSplit,
    pub matrix: MatrixSplit,
}

impl SplittingSpec {
    pub const ORDER: Self = Self {
        form: FormSplit::Order,
        matrix: MatrixSplit::Full,
    };
    pub const ORDER_SWAPPED: Self = Self {
        form: FormSplit::OrderSwapped,
        matrix: MatrixSplit::Full,
    };
    pub const DEPTH: Self = Self {
        form: FormSplit::Depth,
        matrix: MatrixSplit::Full,
    };
}

impl Default for SplittingSpec {
    fn default() -> Self {
        Self::ORDER
    }
}

impl FromStr for SplittingSpec {
    type Err = QveError;

    fn from_str(s: &str) -> Result<Self> {
        let (form, matrix) = match s.split_once('+') {
            Some((f, "jacobi")) => (f, MatrixSplit::Jacobi),
            Some((_, other)) => {
                return Err(QveError::Invalid(format!("unknown matrix splitting '{other}'")))
            }
            None => (s, MatrixSplit::Full),
        };
        let form = match form {
            "depth" => FormSplit::Depth,
            "order" => FormSplit::Order,
            "order-swap" => FormSplit::OrderSwapped,
            other => match other.strip_prefix("blend:") {
                Some(t) => FormSplit::Blend(t.parse().map_err(|_| {
                    QveError::Invalid(format!("bad blend weight '{t}'"))
                })?),
                None => return Err(QveError::Invalid(format!("unknown splitting '{other}'"))),
            },
        };
        Ok(Self { form, matrix })
    }
}

impl fmt::Display for SplittingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.form {
            FormSplit::Depth => write!(f, "depth")?,
            FormSplit::Order => write!(f, "order")?,
            FormSplit::OrderSwapped => write!(f, "order-swap")?,
            FormSplit::Blend(t) => write!(f, "blend:{t}")?,
        }
        if self.matrix == MatrixSplit::Jacobi {
            write!(f, "+jacobi")?;
        }
        Ok(())
    }
}

struct FixedPoint<'a> {
    p: &'a QveProblem,
    x: DVector<f64>,
}

impl Stepper for FixedPoint<'_> {
    fn x(&self) -> &DVector<f64> {
        &self.x
    }

    fn step(&mut self, _ctx: &mut StepContext) -> std::result::Result<(), Breakdown> {
        let rhs = self.p.a() + self.p.b().apply(&self.x, &self.x);
        self.x = self.p.m_handle().msolve(&rhs)?;
        Ok(())
    }
}

/// `x_{k+1} = M^{-1}(a + b(x_k, x_k))` from `x_0 = 0`.
///
/// If the iterates run past `opts.divergence_guard` the report carries
/// `Status::MaxIterations { diverged: true }`: the equation has no
/// nonnegative solution below the guard.
pub fn fixed_point(p: &QveProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let mut st = FixedPoint {
        p,
        x: DVector::zeros(p.dim()),
    };
    Ok(drive(p, &mut st, opts, ALL_CHECKS))
}

const ALL_CHECKS: Checks = Checks {
    monotone: true,
    nonpositive_residual: true,
};

struct Functional<'a> {
    p: &'a QveProblem,
    schedule: &'a [Splitting],
    blocks: Option<&'a [Vec<usize>]>,
    x: DVector<f64>,
}

impl Stepper for Functional<'_> {
    fn x(&self) -> &DVector<f64> {
        &self.x
    }

    fn step(&mut self, ctx: &mut StepContext) -> std::result::Result<(), Breakdown> {
        let s = &self.schedule[(ctx.iteration - 1) % self.schedule.len()];
        match self.blocks {
            None => self.x = s.map(self.p, &self.x, ctx)?,
            Some(blocks) => {
                // z takes the new entries block by block; the step returns the
                // full map at the final z, so x_k <= z <= x_{k+1} holds.
                let mut z = self.x.clone();
                let head = blocks.split_last().map_or(&[][..], |(_, h)| h);
                for block in head {
                    let xhat = s.map(self.p, &z, ctx)?;
                    for &i in block {
                        z[i] = xhat[i];
                    }
                }
                self.x = s.map(self.p, &z, ctx)?;
            }
        }
        Ok(())
    }
}

fn start_point(p: &QveProblem, x0: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    let x0 = x0.cloned().unwrap_or_else(|| DVector::zeros(p.dim()));
    check_len("x0", p.dim(), x0.len())?;
    if x0.iter().any(|&v| v < 0.0) {
        return Err(QveError::BadStart("x0 must be nonnegative".into()));
    }
    let worst = p.residual(&x0)?.max();
    if worst > crate::report::RESIDUAL_SIGN_TOL * (1.0 + x0.amax()) {
        return Err(QveError::BadStart(format!(
            "F(x0) must be nonpositive, max entry {worst:e}"
        )));
    }
    Ok(x0)
}

/// The iteration defined by splitting `s`, from `x0` (default `0`).
pub fn functional_iteration(
    p: &QveProblem,
    s: &Splitting,
    x0: Option<&DVector<f64>>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    switch_iterations_from(p, std::slice::from_ref(s), x0, opts)
}

/// Gauss-Seidel variant: entries are updated one at a time in natural order
/// `0..n`, each update already seeing the new values of earlier entries.
pub fn gauss_seidel_iteration(
    p: &QveProblem,
    s: &Splitting,
    x0: Option<&DVector<f64>>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    let blocks: Vec<Vec<usize>> = (0..p.dim()).map(|i| vec![i]).collect();
    gauss_seidel_blocks(p, s, x0, &blocks, opts)
}

/// Block Gauss-Seidel variant. Blocks are processed in the given order and
/// must partition `0..n`. Each block except the last is copied into `z` from
/// `J(z)^{-1} g(z)` as soon as it is computed, and the step returns
/// `J(z)^{-1} g(z)` at the final `z`. Since `x_k <= z <= x_{k+1}`, the step
/// dominates the plain one and keeps `F(x_{k+1}) <= 0`.
pub fn gauss_seidel_blocks(
    p: &QveProblem,
    s: &Splitting,
    x0: Option<&DVector<f64>>,
    blocks: &[Vec<usize>],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    let mut seen = vec![false; p.dim()];
    for &i in blocks.iter().flatten() {
        if i >= p.dim() || std::mem::replace(&mut seen[i], true) {
            return Err(QveError::Invalid(format!("blocks do not partition: index {i}")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(QveError::Invalid("blocks do not cover every index".into()));
    }
    let mut st = Functional {
        p,
        schedule: std::slice::from_ref(s),
        blocks: Some(blocks),
        x: start_point(p, x0)?,
    };
    Ok(drive(p, &mut st, opts, ALL_CHECKS))
}

/// Applies `schedule[k mod len]` at step `k`, from `x_0 = 0`.
pub fn switch_iterations(
    p: &QveProblem,
    schedule: &[Splitting],
    opts: &SolveOptions,
) -> Result<SolveReport> {
    switch_iterations_from(p, schedule, None, opts)
}

fn switch_iterations_from(
    p: &QveProblem,
    schedule: &[Splitting],
    x0: Option<&DVector<f64>>,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    opts.validate()?;
    if schedule.is_empty() {
        return Err(QveError::Invalid("empty splitting schedule".into()));
    }
    let mut st = Functional {
        p,
        schedule,
        blocks: None,
        x: start_point(p, x0)?,
    };
    Ok(drive(p, &mut st, opts, ALL_CHECKS))
}
