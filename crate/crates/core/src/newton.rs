//! Newton-type methods started from `x_0 = 0`.
//!
//! * [`newton`]: `F'_{x_k}(x_{k+1} - x_k) = -F(x_k)`.
//! * [`modified_newton`]: Newton's method on `G(x) = x - R_x^{-1} a` with
//!   `R_x = M - b(., x)`; its iterates dominate the plain Newton iterates.
//! * [`newton_cr_form`] and [`modified_newton_cr_form`]: the same two methods
//!   rewritten as "reduction" loops that only carry an updated right-hand side
//!   and an updated matrix (resp. bilinear form) from one step to the next.
//!
//! All four report a breakdown instead of regularizing when a matrix to be
//! inverted leaves the M-matrix class; see [`crate::positivity`] for the
//! reduction that removes the usual cause.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::iterations::{solve_diagonal, solve_zmatrix};
use crate::mmatrix::clean_zmatrix;
use crate::problem::QveProblem;
use crate::report::{drive, Breakdown, Checks, SolveOptions, SolveReport, StepContext, Stepper};

const NEWTON_CHECKS: Checks = Checks {
    monotone: true,
    nonpositive_residual: true,
};

/// Iterate, Jacobian `F'_x` and last increment of the Newton method.
#[derive(Clone, Debug)]
pub struct NewtonState {
    pub x: DVector<f64>,
    pub jac: DMatrix<f64>,
    pub step: DVector<f64>,
}

struct Newton<'a> {
    p: &'a QveProblem,
    st: NewtonState,
}

impl Stepper for Newton<'_> {
    fn x(&self) -> &DVector<f64> {
        &self.st.x
    }

    fn step(&mut self, ctx: &mut StepContext) -> std::result::Result<(), Breakdown> {
        let p = self.p;
        let x = &self.st.x;
        let jac = p.derivative(x)?;
        let rhs = if ctx.accurate {
            -p.residual_accurate(x)?
        } else {
            -p.residual(x)?
        };
        let w = solve_zmatrix(jac.clone(), &rhs, ctx)?;
        let next = x + &w;
        if ctx.record {
            // F'_{x_k} x_{k+1} = a - b(x_k, x_k)
            let lhs = &jac * &next;
            let target = p.a() - p.b().apply(x, x);
            let scale = 1.0 + jac.amax() * next.amax() + target.amax();
            ctx.check("F'(x_k) x_(k+1) = a - b(x_k,x_k)", (lhs - target).amax(), 1e-11 * scale);
            // -F(x_{k+1}) = b(w, w)
            let bww = p.b().apply(&w, &w);
            let defect = (p.residual(&next)? + &bww).amax();
            let scale = 1.0 + p.m().amax() * next.amax() + p.b().apply(&next, &next).amax();
            ctx.check("-F(x_(k+1)) = b(w,w)", defect, 1e-12 * scale);
        }
        self.st = NewtonState {
            x: next,
            jac,
            step: w,
        };
        Ok(())
    }
}

pub fn newton(p: &QveProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let n = p.dim();
    let mut st = Newton {
        p,
        st: NewtonState {
            x: DVector::zeros(n),
            jac: p.m().clone(),
            step: DVector::zeros(n),
        },
    };
    Ok(drive(p, &mut st, opts, NEWTON_CHECKS))
}

/// Iterate, `R_x = M - b(., x)` and `G'_x` of the modified Newton method.
#[derive(Clone, Debug)]
pub struct ModifiedNewtonState {
    pub x: DVector<f64>,
    pub rx: DMatrix<f64>,
    pub gjac: DMatrix<f64>,
}

const ROUNDOFF_TOL: f64 = 1e-12;

/// Right-hand side images under `R_x^{-1}`, plus the diagonal of `R_x` when it is diagonal.
type RxImages = (DMatrix<f64>, DVector<f64>, Option<DVector<f64>>);

/// `(R_x^{-1} a, R_x^{-1} L)` for a matrix `L`, with `R_x = M - b(., x)`.
fn apply_rx_inverse(
    p: &QveProblem,
    x: &DVector<f64>,
    ctx: &mut StepContext,
) -> std::result::Result<RxImages, Breakdown> {
    let m = p.m();
    let n = p.dim();
    let m_diagonal = (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0));
    if m_diagonal {
        if let Some(d) = p.b().right_diagonal(x) {
            let diag = m.diagonal() - d;
            let ra = solve_diagonal(&diag, p.a(), ctx)?;
            let rx = DMatrix::from_diagonal(&diag);
            return Ok((rx, ra, Some(diag)));
        }
    }
    let rx = m - p.b().right_matrix(x);
    let ra = solve_zmatrix(rx.clone(), p.a(), ctx)?;
    Ok((rx, ra, None))
}

/// `G'_x = I - R_x^{-1} b(R_x^{-1} a, .)`.
pub fn g_jacobian(p: &QveProblem, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let mut ctx = StepContext {
        iteration: 0,
        record: false,
        accurate: false,
        violations: Vec::new(),
        warnings: Vec::new(),
    };
    let (rx, ra, _) = apply_rx_inverse(p, x, &mut ctx)
        .map_err(|_| crate::error::QveError::NotMMatrix("R_x is not invertible".into()))?;
    let l = p.b().left_matrix(&ra);
    let k = crate::mmatrix::solve_general(&rx, &l)?;
    Ok(DMatrix::identity(p.dim(), p.dim()) - k)
}

struct ModifiedNewton<'a> {
    p: &'a QveProblem,
    st: ModifiedNewtonState,
}

impl Stepper for ModifiedNewton<'_> {
    fn x(&self) -> &DVector<f64> {
        &self.st.x
    }

    fn step(&mut self, ctx: &mut StepContext) -> std::result::Result<(), Breakdown> {
        let p = self.p;
        let x = &self.st.x;
        let (rx, ra, diag) = apply_rx_inverse(p, x, ctx)?;
        let l = p.b().left_matrix(&ra);
        let k = match diag {
            Some(d) => {
                let mut k = l;
                for (i, mut row) in k.row_iter_mut().enumerate() {
                    row /= d[i];
                }
                k
            }
            None => crate::mmatrix::solve_general(&rx, &l)?,
        };
        let mut gjac = DMatrix::identity(p.dim(), p.dim()) - k;
        clean_zmatrix(&mut gjac, ROUNDOFF_TOL);
        // -G(x) = R_x^{-1} a - x
        let w = solve_zmatrix(gjac.clone(), &(&ra - x), ctx)?;
        self.st = ModifiedNewtonState {
            x: x + w,
            rx,
            gjac,
        };
        Ok(())
    }
}

pub fn modified_newton(p: &QveProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let n = p.dim();
    let mut st = ModifiedNewton {
        p,
        st: ModifiedNewtonState {
            x: DVector::zeros(n),
            rx: p.m().clone(),
            gjac: DMatrix::identity(n, n),
        },
    };
    Ok(drive(p, &mut st, opts, NEWTON_CHECKS))
}

/// Loop `w = M~^{-1} a~; x += w; a~ = b(w, w); M~ -= b(w, .) + b(., w)`.
/// After step `k`, `M~ = F'_{x_k}` and `a~ = -F(x_k)`.
struct NewtonCr<'a> {
    p: &'a QveProblem,
    x: DVector<f64>,
    m_t: DMatrix<f64>,
    a_t: DVector<f64>,
}

impl Stepper for NewtonCr<'_> {
    fn x(&self) -> &DVector<f64> {
        &self.x
    }

    fn step(&mut self, ctx: &mut StepContext) -> std::result::Result<(), Breakdown> {
        let w = solve_zmatrix(self.m_t.clone(), &self.a_t, ctx)?;
        self.x += &w;
        let b = self.p.b();
        self.a_t = b.apply(&w, &w);
        self.m_t -= b.left_matrix(&w) + b.right_matrix(&w);
        Ok(())
    }
}

pub fn newton_cr_form(p: &QveProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let mut st = NewtonCr {
        p,
        x: DVector::zeros(p.dim()),
        m_t: p.m().clone(),
        a_t: p.a().clone(),
    };
    Ok(drive(p, &mut st, opts, NEWTON_CHECKS))
}

/// Loop on `a~ = R_{x_k}^{-1} a` and `b~ = R_{x_k}^{-1} b`; `b~` is stored as
/// the matrix `T = R_{x_k}^{-1}` applied to `b`.
struct ModifiedNewtonCr<'a> {
    p: &'a QveProblem,
    x: DVector<f64>,
    w: DVector<f64>,
    a_t: DVector<f64>,
    t: DMatrix<f64>,
}

impl Stepper for ModifiedNewtonCr<'_> {
    fn x(&self) -> &DVector<f64> {
        &self.x
    }

    fn step(&mut self, ctx: &mut StepContext) -> std::result::Result<(), Breakdown> {
        let n = self.p.dim();
        let b = self.p.b();
        let id = DMatrix::<f64>::identity(n, n);
        // (I - b~(., w)) updates both a~ and b~
        let mut k = &id - &self.t * b.right_matrix(&self.w);
        clean_zmatrix(&mut k, ROUNDOFF_TOL);
        let mut rhs = DMatrix::zeros(n, n + 1);
        rhs.columns_mut(0, n).copy_from(&self.t);
        rhs.set_column(n, &self.a_t);
        let h = crate::mmatrix::MMatrixHandle::new(k, crate::mmatrix::CLASSIFY_TOL)?;
        match h.classification() {
            crate::mmatrix::Classification::NotM => return Err(Breakdown::NotM),
            _ if !h.is_solvable() => return Err(Breakdown::Singular),
            _ => {}
        }
        let sol = h.solve_matrix(&rhs)?;
        self.t = sol.columns(0, n).into_owned();
        self.a_t = sol.column(n).into_owned();
        // w = (I - b~(a~, .))^{-1} (a~ - x)
        let mut gjac = &id - &self.t * b.left_matrix(&self.a_t);
        clean_zmatrix(&mut gjac, ROUNDOFF_TOL);
        self.w = solve_zmatrix(gjac, &(&self.a_t - &self.x), ctx)?;
        self.x += &self.w;
        Ok(())
    }
}

pub fn modified_newton_cr_form(p: &QveProblem, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let n = p.dim();
    let t = p.m_handle().inverse()?;
    let a_t = p.m_handle().msolve(p.a())?;
    let mut st = ModifiedNewtonCr {
        p,
        x: DVector::zeros(n),
        w: DVector::zeros(n),
        a_t,
        t,
    };
    Ok(drive(p, &mut st, opts, NEWTON_CHECKS))
}
