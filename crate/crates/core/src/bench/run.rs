//! Single runs and side-by-side comparisons, written as tab-separated tables.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::QveError;
use crate::iterations::SplittingSpec;
use crate::positivity::solve_with_reduction;
use crate::report::{SolveOptions, Status};
use crate::solver::Method;
use crate::unilateral::{solve_cr, solve_lr};

use super::file::Loaded;

/// A vector solver or one of the reduction methods for the unilateral format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverId {
    Vector(Method),
    Lr,
    Cr,
}

impl FromStr for SolverId {
    type Err = QveError;

    fn from_str(s: &str) -> Result<Self, QveError> {
        match s {
            "lr" => Ok(SolverId::Lr),
            "cr" => Ok(SolverId::Cr),
            _ => s.parse().map(SolverId::Vector),
        }
    }
}

impl fmt::Display for SolverId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverId::Vector(m) => m.fmt(f),
            SolverId::Lr => f.write_str("lr"),
            SolverId::Cr => f.write_str("cr"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub solver: SolverId,
    pub opts: SolveOptions,
    /// Run through the positivity reduction first.
    pub reduce: bool,
}

impl RunSpec {
    pub fn new(solver: SolverId) -> Self {
        Self {
            solver,
            opts: SolveOptions::default(),
            reduce: false,
        }
    }

    /// Builds a spec from a solver id and a separate splitting flag. An id of
    /// the form `gs[depth]` overrides the flag.
    pub fn parse(solver: &str, splitting: Option<&str>) -> Result<Self, QveError> {
        let id = match (solver.contains('['), splitting) {
            (false, Some(s)) if matches!(solver, "funit" | "gs") => {
                SolverId::Vector(Method::from_id(solver, s.parse::<SplittingSpec>()?)?)
            }
            _ => solver.parse()?,
        };
        Ok(Self::new(id))
    }
}

/// Residual history of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub label: String,
    pub status: Status,
    pub residuals: Vec<f64>,
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub warnings: Vec<String>,
    pub eliminated: Vec<usize>,
}

pub fn execute(l: &Loaded, spec: &RunSpec) -> Result<History, QveError> {
    let label = spec.solver.to_string();
    match spec.solver {
        SolverId::Lr | SolverId::Cr => {
            let u = l.unilateral.as_ref().ok_or_else(|| {
                QveError::Invalid(format!("solver {label} needs an e4 problem"))
            })?;
            if spec.reduce {
                return Err(QveError::Invalid(format!("solver {label} does not support --reduce")));
            }
            let r = if spec.solver == SolverId::Lr {
                solve_lr(u, &spec.opts)?
            } else {
                solve_cr(u, &spec.opts)?
            };
            Ok(History {
                label,
                status: r.status,
                residuals: r.residuals,
                times: r.times,
                x: r.x.as_slice().to_vec(),
                warnings: r.warnings,
                eliminated: Vec::new(),
            })
        }
        SolverId::Vector(method) => {
            let r = if spec.reduce {
                solve_with_reduction(&l.problem, method, &spec.opts)?
            } else {
                method.run(&l.problem, &spec.opts)?
            };
            Ok(History {
                label,
                status: r.status,
                residuals: r.residuals,
                times: r.times,
                x: r.x.as_slice().to_vec(),
                warnings: r.warnings,
                eliminated: r.eliminated,
            })
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

/// Table with columns `iter`, `residual`, `elapsed_s`, framed by `#` comments
/// carrying the spec, the status and the final iterate.
pub fn format_history(h: &History, spec: &RunSpec, with_time: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# solver={} tol={:e} maxit={} reduce={}",
        h.label, spec.opts.tol, spec.opts.maxit, spec.reduce
    );
    for w in &h.warnings {
        let _ = writeln!(out, "# warning: {w}");
    }
    out.push_str(if with_time { "iter\tresidual\telapsed_s\n" } else { "iter\tresidual\n" });
    for (k, r) in h.residuals.iter().enumerate() {
        if with_time {
            let _ = writeln!(out, "{k}\t{r:e}\t{:.6}", h.times.get(k).copied().unwrap_or(0.0));
        } else {
            let _ = writeln!(out, "{k}\t{r:e}");
        }
    }
    let _ = writeln!(out, "# status: {}", h.status);
    if !h.eliminated.is_empty() {
        let idx: Vec<String> = h.eliminated.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "# eliminated: {}", idx.join(" "));
    }
    let _ = writeln!(out, "# x: {}", join(&h.x));
    out
}

/// Output and process exit code of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub table: String,
    pub exit_code: i32,
}

pub fn run(l: &Loaded, spec: &RunSpec, with_time: bool) -> Result<RunOutcome, QveError> {
    let h = execute(l, spec)?;
    Ok(RunOutcome {
        table: format_history(&h, spec, with_time),
        exit_code: h.status.exit_code(),
    })
}

/// Runs every spec (concurrently, one thread each) and lays the residual
/// histories side by side. When both `newton` and `mnewton` are present an
/// extra column checks `mnewton <= newton` row by row. Failed runs are listed
/// in the footer and leave their column empty.
pub fn compare(l: &Loaded, specs: &[RunSpec]) -> String {
    let results: Vec<Result<History, QveError>> = std::thread::scope(|s| {
        let handles: Vec<_> = specs.iter().map(|spec| s.spawn(move || execute(l, spec))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(QveError::Invalid("solver panicked".into()))))
            .collect()
    });
    let labels: Vec<String> = specs.iter().map(|s| s.solver.to_string()).collect();
    let find = |id: &str| labels.iter().position(|l| l == id);
    let dominance = find("newton").zip(find("mnewton"));
    let rows = results
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .map(|h| h.residuals.len())
        .max()
        .unwrap_or(0);
    let cell = |i: usize, k: usize| -> Option<f64> {
        results[i].as_ref().ok().and_then(|h| h.residuals.get(k).copied())
    };
    let mut out = String::new();
    out.push_str("iter");
    for l in &labels {
        let _ = write!(out, "\t{l}");
    }
    if dominance.is_some() {
        out.push_str("\tmnewton<=newton");
    }
    out.push('\n');
    for k in 0..rows {
        let _ = write!(out, "{k}");
        for i in 0..labels.len() {
            match cell(i, k) {
                Some(v) => {
                    let _ = write!(out, "\t{v:e}");
                }
                None => out.push_str("\t-"),
            }
        }
        if let Some((n, m)) = dominance {
            let mark = match (cell(n, k), cell(m, k)) {
                (Some(rn), Some(rm)) if rm <= rn => "pass",
                (Some(_), Some(_)) => "fail",
                (Some(_), None) => "pass",
                _ => "-",
            };
            let _ = write!(out, "\t{mark}");
        }
        out.push('\n');
    }
    for (label, r) in labels.iter().zip(&results) {
        match r {
            Ok(h) => {
                let _ = writeln!(out, "# {label}: {} after {} steps", h.status, h.residuals.len() - 1);
            }
            Err(e) => {
                let _ = writeln!(out, "# {label}: error: {e}");
            }
        }
    }
    out
}
