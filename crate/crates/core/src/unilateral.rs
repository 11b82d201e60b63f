//! Logarithmic and Cyclic Reduction for the unilateral matrix equation
//! `X = A + BX + CX^2` with `A, B, C >= 0` and `(A + B + C)e <= e`.
//!
//! Neither method inverts `C`: every inverse is of `I - B` or of a matrix
//! derived from it, all of which stay M-matrices on valid inputs.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::error::{check_len, QveError, Result};
use crate::mmatrix::{clean_zmatrix, Classification, MMatrixHandle, CLASSIFY_TOL};
use crate::report::{SolveOptions, Status, Violation};

/// Slack allowed on the row sums of `A + B + C`.
pub const ROW_SUM_TOL: f64 = 1e-12;
const ROUNDOFF_TOL: f64 = 1e-12;

/// Validated coefficients `(A, B, C)`.
#[derive(Clone, Debug)]
pub struct UnilateralProblem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    i_minus_b: MMatrixHandle,
}

impl UnilateralProblem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let m = a.nrows();
        for (what, x) in [("A", &a), ("B", &b), ("C", &c)] {
            check_len(what, m, x.nrows())?;
            check_len(what, m, x.ncols())?;
            if let Some((idx, &v)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
                return Err(QveError::Negative {
                    what,
                    index: format!("({}, {})", idx % m, idx / m),
                    value: v,
                });
            }
        }
        let sums = (&a + &b + &c).column_sum();
        if let Some((i, &s)) = sums.iter().enumerate().find(|(_, s)| **s > 1.0 + ROW_SUM_TOL) {
            return Err(QveError::Invalid(format!(
                "row {i} of A + B + C sums to {s}, more than 1"
            )));
        }
        let i_minus_b = MMatrixHandle::new(DMatrix::identity(m, m) - &b, CLASSIFY_TOL)?;
        if i_minus_b.classification() != Classification::NonsingularM {
            return Err(QveError::NotMMatrix("I - B".into()));
        }
        Ok(Self { a, b, c, i_minus_b })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// `X - A - BX - CX^2`.
    pub fn residual(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x - &self.a - &self.b * x - &self.c * x * x
    }

    pub fn residual_norm(&self, x: &DMatrix<f64>) -> f64 {
        inf_norm(&self.residual(x))
    }

    /// `(B_{-1}, B_1) = ((I - B)^{-1} A, (I - B)^{-1} C)`.
    pub fn reduced_coefficients(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let bm = self.i_minus_b.solve_matrix(&self.a).expect("checked at construction");
        let bp = self.i_minus_b.solve_matrix(&self.c).expect("checked at construction");
        (bm, bp)
    }
}

/// Max row sum of absolute values.
pub fn inf_norm(x: &DMatrix<f64>) -> f64 {
    x.abs().column_sum().max()
}

/// Result of a matrix-valued solve.
#[derive(Debug, Clone)]
pub struct UnilateralReport {
    pub x: DMatrix<f64>,
    pub status: Status,
    pub iterations: usize,
    /// `||X_k - A - BX_k - CX_k^2||_inf` for `k = 0..=iterations`.
    pub residuals: Vec<f64>,
    /// Size of the change in `X` at each step.
    pub corrections: Vec<f64>,
    pub times: Vec<f64>,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl UnilateralReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }
}

enum Fail {
    Singular,
    NotM,
}

/// Factors a matrix that is a Z-matrix in exact arithmetic.
fn factor(mut z: DMatrix<f64>, warnings: &mut Vec<String>) -> std::result::Result<MMatrixHandle, Fail> {
    clean_zmatrix(&mut z, ROUNDOFF_TOL);
    let h = MMatrixHandle::new(z, CLASSIFY_TOL).map_err(|_| Fail::NotM)?;
    match h.classification() {
        Classification::NotM => Err(Fail::NotM),
        Classification::SingularM if !h.is_solvable() => Err(Fail::Singular),
        Classification::SingularM => {
            let msg = "near-singular M-matrix inverted (null-recurrent boundary?)";
            if !warnings.iter().any(|w| w == msg) {
                warnings.push(msg.to_string());
            }
            Ok(h)
        }
        Classification::NonsingularM => Ok(h),
    }
}

struct Run<'a> {
    p: &'a UnilateralProblem,
    start: Instant,
    report: UnilateralReport,
}

impl<'a> Run<'a> {
    fn new(p: &'a UnilateralProblem, x0: DMatrix<f64>) -> Self {
        let r0 = p.residual_norm(&x0);
        Self {
            p,
            start: Instant::now(),
            report: UnilateralReport {
                x: x0,
                status: Status::MaxIterations { diverged: false },
                iterations: 0,
                residuals: vec![r0],
                corrections: Vec::new(),
                times: vec![0.0],
                violations: Vec::new(),
                warnings: Vec::new(),
            },
        }
    }

    /// Records iterate `k`; returns true once `correction <= tol`.
    fn accept(&mut self, k: usize, x: DMatrix<f64>, correction: f64, opts: &SolveOptions) -> bool {
        let r = &mut self.report;
        if opts.record_history {
            let drop = (&r.x - &x).max();
            if drop > crate::report::MONOTONE_TOL * (1.0 + x.amax()) {
                r.violations.push(Violation {
                    iteration: k,
                    what: "monotone",
                    amount: drop,
                });
            }
        }
        r.iterations = k;
        r.residuals.push(self.p.residual_norm(&x));
        r.times.push(self.start.elapsed().as_secs_f64());
        r.corrections.push(correction);
        r.x = x;
        if correction <= opts.tol {
            r.status = Status::Converged;
            return true;
        }
        false
    }

    fn fail(&mut self, k: usize, f: Fail) {
        self.report.status = match f {
            Fail::Singular => Status::BreakdownSingular { iteration: k },
            Fail::NotM => Status::BreakdownNotM { iteration: k },
        };
    }
}

/// Logarithmic Reduction. Stops when the last correction `U B_{-1}` is at most
/// `opts.tol` in the infinity norm.
pub fn solve_lr(p: &UnilateralProblem, opts: &SolveOptions) -> Result<UnilateralReport> {
    opts.validate()?;
    let m = p.dim();
    let id = DMatrix::<f64>::identity(m, m);
    let (mut bm, mut bp) = p.reduced_coefficients();
    let mut u = bp.clone();
    let mut run = Run::new(p, bm.clone());
    for k in 1..=opts.maxit {
        let cm = &id - &bp * &bm - &bm * &bp;
        let h = match factor(cm, &mut run.report.warnings) {
            Ok(h) => h,
            Err(f) => {
                run.fail(k, f);
                break;
            }
        };
        bm = h.solve_matrix(&(&bm * &bm))?;
        bp = h.solve_matrix(&(&bp * &bp))?;
        let step = &u * &bm;
        let correction = inf_norm(&step);
        let x = &run.report.x + step;
        u = &u * &bp;
        if run.accept(k, x, correction, opts) {
            break;
        }
    }
    run.report.warnings.dedup();
    Ok(run.report)
}

/// Cyclic Reduction. Stops when `||X_new - X_old||_inf <= opts.tol`.
///
/// `S` is updated as `S <- S - C R^{-1} A` with the current `C, R, A`, which
/// accumulates the Schur complement across the reduction steps.
pub fn solve_cr(p: &UnilateralProblem, opts: &SolveOptions) -> Result<UnilateralReport> {
    opts.validate()?;
    let m = p.dim();
    let id = DMatrix::<f64>::identity(m, m);
    let a0 = p.a().clone();
    let mut r = &id - p.b();
    let mut s = r.clone();
    let mut a = p.a().clone();
    let mut c = p.c().clone();
    let mut run = Run::new(p, DMatrix::zeros(m, m));
    for k in 1..=opts.maxit {
        let rh = match factor(r.clone(), &mut run.report.warnings) {
            Ok(h) => h,
            Err(f) => {
                run.fail(k, f);
                break;
            }
        };
        let ra = rh.solve_matrix(&a)?;
        let rc = rh.solve_matrix(&c)?;
        let c_ra = &c * &ra;
        s -= &c_ra;
        let sh = match factor(s.clone(), &mut run.report.warnings) {
            Ok(h) => h,
            Err(f) => {
                run.fail(k, f);
                break;
            }
        };
        let x = sh.solve_matrix(&a0)?;
        let correction = inf_norm(&(&x - &run.report.x));
        r = &r - &a * &rc - &c_ra;
        a = &a * &ra;
        c = &c * &rc;
        if run.accept(k, x, correction, opts) {
            break;
        }
    }
    run.report.warnings.dedup();
    Ok(run.report)
}

/// Defect of `Y = X^2` in the squared equation
/// `Y = K^{-1} B_{-1}^2 + K^{-1} B_1^2 Y^2`, `K = I - B_{-1} B_1 - B_1 B_{-1}`,
/// when `X` solves `X = B_{-1} + B_1 X^2`.
pub fn graeffe_step_check(p: &UnilateralProblem, x: &DMatrix<f64>) -> Result<f64> {
    let m = p.dim();
    check_len("X rows", m, x.nrows())?;
    check_len("X columns", m, x.ncols())?;
    let (bm, bp) = p.reduced_coefficients();
    let k = DMatrix::<f64>::identity(m, m) - &bm * &bp - &bp * &bm;
    let y = x * x;
    let rhs = &bm * &bm + &bp * &bp * &y * &y;
    let z = crate::mmatrix::solve_general(&k, &rhs)?;
    Ok(inf_norm(&(y - z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(a: &[f64], b: &[f64], c: &[f64], m: usize) -> UnilateralProblem {
        UnilateralProblem::new(
            DMatrix::from_row_slice(m, m, a),
            DMatrix::from_row_slice(m, m, b),
            DMatrix::from_row_slice(m, m, c),
        )
        .unwrap()
    }

    fn sixth() -> UnilateralProblem {
        let s = [1.0 / 6.0; 4];
        uni(&s, &s, &s, 2)
    }

    fn long_run() -> SolveOptions {
        SolveOptions::default().with_tol(1e-300).with_maxit(60)
    }

    #[test]
    fn validation() {
        let z = DMatrix::zeros(2, 2);
        let big = DMatrix::from_element(2, 2, 0.6);
        assert!(UnilateralProblem::new(big.clone(), z.clone(), z.clone()).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[-0.1, 0.0, 0.0, 0.0]);
        assert!(matches!(
            UnilateralProblem::new(neg, z.clone(), z.clone()),
            Err(QveError::Negative { .. })
        ));
        assert!(UnilateralProblem::new(z.clone(), DMatrix::identity(2, 2), z.clone()).is_err());
        assert!(UnilateralProblem::new(DMatrix::zeros(3, 3), z.clone(), z).is_err());
    }

    #[test]
    fn no_c_gives_linear_solution() {
        let p = uni(&[0.2, 0.1, 0.0, 0.3], &[0.3, 0.2, 0.1, 0.4], &[0.0; 4], 2);
        let expect = (DMatrix::identity(2, 2) - p.b()).try_inverse().unwrap() * p.a();
        for r in [solve_lr(&p, &SolveOptions::default()), solve_cr(&p, &SolveOptions::default())] {
            let r = r.unwrap();
            assert!(r.status.is_converged());
            assert!((&r.x - &expect).amax() < 1e-15);
            assert!(r.iterations <= 2);
        }
    }

    #[test]
    fn no_a_gives_zero() {
        let p = uni(&[0.0; 4], &[0.3, 0.2, 0.1, 0.4], &[0.2, 0.1, 0.0, 0.3], 2);
        for r in [solve_lr(&p, &SolveOptions::default()), solve_cr(&p, &SolveOptions::default())] {
            let r = r.unwrap();
            assert!(r.status.is_converged());
            assert_eq!(r.x, DMatrix::zeros(2, 2));
        }
    }

    #[test]
    fn scalar_matches_quadratic_formula() {
        // x = 1/4 + x^2/2.
        let p = uni(&[0.25], &[0.0], &[0.5], 1);
        let exact = 1.0 - 0.5f64.sqrt();
        for r in [solve_lr(&p, &SolveOptions::default()), solve_cr(&p, &SolveOptions::default())] {
            let r = r.unwrap();
            assert!(r.status.is_converged());
            assert!((r.x[(0, 0)] - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn critical_instance_agrees() {
        let p = sixth();
        let exact = DMatrix::from_element(2, 2, 0.5);
        let lr = solve_lr(&p, &long_run()).unwrap();
        let cr = solve_cr(&p, &long_run()).unwrap();
        assert!(!lr.status.is_breakdown() && !cr.status.is_breakdown());
        assert!((&lr.x - &exact).amax() < 1e-8, "{}", lr.x);
        assert!((&cr.x - &exact).amax() < 1e-8, "{}", cr.x);
        assert!((&lr.x - &cr.x).amax() < 1e-8);
    }

    #[test]
    fn lr_and_cr_agree_on_positive_recurrent() {
        let p = uni(
            &[0.3, 0.1, 0.05, 0.35],
            &[0.1, 0.1, 0.1, 0.1],
            &[0.2, 0.1, 0.15, 0.15],
            2,
        );
        let opts = SolveOptions::default().with_tol(1e-14).recording();
        let lr = solve_lr(&p, &opts).unwrap();
        let cr = solve_cr(&p, &opts).unwrap();
        assert!(lr.status.is_converged() && cr.status.is_converged());
        assert!((&lr.x - &cr.x).amax() <= 1e-9);
        assert!(lr.final_residual() < 1e-13 && cr.final_residual() < 1e-13);
        assert!(lr.violations.is_empty(), "{:?}", lr.violations);
        assert!(cr.violations.is_empty(), "{:?}", cr.violations);
        let rows = lr.x.column_sum();
        assert!(rows.iter().all(|&s| s <= 1.0 + 1e-10));
        assert!(lr.iterations < 10);
    }

    #[test]
    fn graeffe_examples() {
        // B_1 = 0: Y = B_{-1}^2 exactly.
        let p = uni(&[0.2, 0.1, 0.0, 0.3], &[0.0; 4], &[0.0; 4], 2);
        let x = p.a().clone();
        assert_eq!(graeffe_step_check(&p, &x).unwrap(), 0.0);

        let q = uni(&[0.25], &[0.0], &[0.5], 1);
        let x = DMatrix::from_element(1, 1, 1.0 - 0.5f64.sqrt());
        assert!(graeffe_step_check(&q, &x).unwrap() <= 1e-12);

        let r = uni(
            &[0.3, 0.1, 0.05, 0.35],
            &[0.1, 0.1, 0.1, 0.1],
            &[0.2, 0.1, 0.15, 0.15],
            2,
        );
        let x = solve_lr(&r, &SolveOptions::default()).unwrap().x;
        assert!(graeffe_step_check(&r, &x).unwrap() <= 1e-9);
    }
}
