//! Options, termination status and per-run reports shared by all vector solvers.

use std::fmt;
use std::time::Instant;

use nalgebra::DVector;

use crate::error::QveError;
use crate::problem::QveProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Stop once `||F(x_k)||_inf <= tol`.
    pub tol: f64,
    pub maxit: usize,
    /// Keep a copy of every iterate and run the per-step invariant checks.
    pub record_history: bool,
    /// Iterates with `||x_k||_inf` above this count as divergence.
    pub divergence_guard: f64,
    /// Evaluate `F` in double-double arithmetic for the stopping test and for
    /// Newton's right-hand side. Needed to get past `sqrt(eps)` accuracy on
    /// critical problems.
    pub accurate_residual: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            maxit: 1000,
            record_history: false,
            divergence_guard: 1e12,
            accurate_residual: false,
        }
    }
}

impl SolveOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_maxit(mut self, maxit: usize) -> Self {
        self.maxit = maxit;
        self
    }

    pub fn with_accurate_residual(mut self) -> Self {
        self.accurate_residual = true;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_history = true;
        self
    }

    pub fn validate(&self) -> Result<(), QveError> {
        if !(self.tol > 0.0) || self.maxit < 1 {
            return Err(QveError::Invalid(format!(
                "tol must be positive and maxit at least 1 (tol={}, maxit={})",
                self.tol, self.maxit
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    /// Iteration budget exhausted. `diverged` is set when the divergence guard
    /// fired, which means no minimal solution was found below the guard.
    MaxIterations { diverged: bool },
    /// The matrix to invert at step `iteration` is numerically singular.
    BreakdownSingular { iteration: usize },
    /// The matrix to invert at step `iteration` is not an M-matrix.
    BreakdownNotM { iteration: usize },
}

impl Status {
    pub fn is_converged(&self) -> bool {
        matches!(self, Status::Converged)
    }

    pub fn is_breakdown(&self) -> bool {
        matches!(
            self,
            Status::BreakdownSingular { .. } | Status::BreakdownNotM { .. }
        )
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Status::Converged => 0,
            Status::BreakdownSingular { .. } | Status::BreakdownNotM { .. } => 2,
            Status::MaxIterations { .. } => 3,
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Converged => write!(f, "converged"),
            Status::MaxIterations { diverged: false } => write!(f, "maxit"),
            Status::MaxIterations { diverged: true } => {
                write!(f, "maxit (divergence guard exceeded: A1 presumed violated)")
            }
            Status::BreakdownSingular { iteration } => {
                write!(f, "breakdown-singular at step {iteration}")
            }
            Status::BreakdownNotM { iteration } => write!(f, "breakdown-not-M at step {iteration}"),
        }
    }
}

/// An invariant that failed during a recorded run.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub iteration: usize,
    pub what: &'static str,
    pub amount: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Final iterate; on breakdown, the iterate at which the step failed.
    pub x: DVector<f64>,
    pub status: Status,
    pub iterations: usize,
    /// `||F(x_k)||_inf` for `k = 0..=iterations`.
    pub residuals: Vec<f64>,
    /// Seconds since the start of the run, aligned with `residuals`.
    pub times: Vec<f64>,
    /// `x_0, ..., x_iterations` when `record_history` is set.
    pub iterates: Option<Vec<DVector<f64>>>,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
    /// Coordinates removed by the positivity reduction (always zero in `x`).
    pub eliminated: Vec<usize>,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }
}

/// Outcome of a failed step.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Breakdown {
    Singular,
    NotM,
}

impl From<QveError> for Breakdown {
    fn from(e: QveError) -> Self {
        match e {
            QveError::NotMMatrix(_) | QveError::NotZMatrix { .. } => Breakdown::NotM,
            _ => Breakdown::Singular,
        }
    }
}

/// One step of an iterative method on a vector problem.
pub(crate) trait Stepper {
    fn x(&self) -> &DVector<f64>;
    fn step(&mut self, ctx: &mut StepContext) -> Result<(), Breakdown>;
}

/// Per-step bookkeeping handed to [`Stepper::step`].
pub(crate) struct StepContext {
    pub iteration: usize,
    pub record: bool,
    pub accurate: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<String>,
}

impl StepContext {
    pub fn warn_once(&mut self, msg: &str) {
        if !self.warnings.iter().any(|w| w == msg) {
            self.warnings.push(msg.to_string());
        }
    }

    pub fn check(&mut self, what: &'static str, amount: f64, tol: f64) {
        if self.record && amount > tol {
            self.violations.push(Violation {
                iteration: self.iteration,
                what,
                amount,
            });
        }
    }
}

/// Which generic invariants the driver verifies when recording.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Checks {
    pub monotone: bool,
    pub nonpositive_residual: bool,
}

pub(crate) const MONOTONE_TOL: f64 = 1e-12;
pub(crate) const RESIDUAL_SIGN_TOL: f64 = 1e-10;

pub(crate) fn drive(
    p: &QveProblem,
    stepper: &mut dyn Stepper,
    opts: &SolveOptions,
    checks: Checks,
) -> SolveReport {
    let start = Instant::now();
    let res0 = residual(p, stepper.x(), opts.accurate_residual).amax();
    let mut report = SolveReport {
        x: stepper.x().clone(),
        status: Status::MaxIterations { diverged: false },
        iterations: 0,
        residuals: vec![res0],
        times: vec![start.elapsed().as_secs_f64()],
        iterates: opts.record_history.then(|| vec![stepper.x().clone()]),
        violations: Vec::new(),
        warnings: p.warnings().to_vec(),
        eliminated: Vec::new(),
    };
    let mut ctx = StepContext {
        iteration: 0,
        record: opts.record_history,
        accurate: opts.accurate_residual,
        violations: Vec::new(),
        warnings: Vec::new(),
    };
    for k in 1..=opts.maxit {
        ctx.iteration = k;
        let prev = stepper.x().clone();
        if let Err(b) = stepper.step(&mut ctx) {
            report.status = match b {
                Breakdown::Singular => Status::BreakdownSingular { iteration: k },
                Breakdown::NotM => Status::BreakdownNotM { iteration: k },
            };
            report.x = prev;
            break;
        }
        let x = stepper.x();
        report.iterations = k;
        if !x.iter().all(|v| v.is_finite()) || x.amax() > opts.divergence_guard {
            report.status = Status::MaxIterations { diverged: true };
            report.x = x.clone();
            break;
        }
        let r = residual(p, x, opts.accurate_residual);
        report.residuals.push(r.amax());
        report.times.push(start.elapsed().as_secs_f64());
        if let Some(h) = report.iterates.as_mut() {
            h.push(x.clone());
        }
        let scale = 1.0 + x.amax();
        if checks.monotone {
            let drop = (&prev - x).max();
            ctx.check("monotone", drop, MONOTONE_TOL * scale);
        }
        if checks.nonpositive_residual {
            ctx.check("F(x_k) <= 0", r.max(), RESIDUAL_SIGN_TOL * scale);
        }
        report.x = x.clone();
        if r.amax() <= opts.tol {
            report.status = Status::Converged;
            break;
        }
    }
    report.violations = ctx.violations;
    report.warnings.extend(ctx.warnings);
    report
}

fn residual(p: &QveProblem, x: &DVector<f64>, accurate: bool) -> DVector<f64> {
    let r = if accurate {
        p.residual_accurate(x)
    } else {
        p.residual(x)
    };
    r.expect("dimension fixed by the problem")
}
