//! File format, instance generator and runners behind the `qve` binary.

use std::fmt::Write as _;

use thiserror::Error;

use crate::error::QveError;
use crate::oracle::brute_support;
use crate::positivity::positivity_pattern;

pub mod file;
pub mod gen;
pub mod run;

pub use file::{Expected, Loaded, ModelSpec, ProblemFile};
pub use gen::{find_supersolution, generate, GenSpec};
pub use run::{compare, execute, format_history, run, History, RunOutcome, RunSpec, SolverId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Problem(#[from] QveError),
}

impl BenchError {
    /// Parse and validation failures both map to exit code 1.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

/// Text dump of the positivity pattern: the support, the insertion trace and a
/// cross-check against the boolean fixed-point oracle.
pub fn pattern_dump(l: &Loaded) -> Result<String, QveError> {
    let p = &l.problem;
    let pat = positivity_pattern(p);
    let list = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    let _ = writeln!(out, "n\t{}", p.dim());
    let _ = writeln!(out, "support\t{}", list(&pat.support));
    let eliminated: Vec<usize> = (0..p.dim()).filter(|&i| !pat.contains(i)).collect();
    let _ = writeln!(out, "eliminated\t{}", list(&eliminated));
    for (t, ins) in &pat.trace {
        let src = t.map_or_else(|| "a".to_string(), |t| t.to_string());
        let _ = writeln!(out, "from {src}\t{}", list(ins));
    }
    let _ = writeln!(out, "pops\t{}", pat.pops);
    let _ = writeln!(out, "minv_applications\t{}", pat.minv_applications);
    let brute = brute_support(p)?;
    let verdict = if brute == pat.support { "agree" } else { "DIFFER" };
    let _ = writeln!(out, "brute_support\t{}\t{verdict}", list(&brute));
    Ok(out)
}
