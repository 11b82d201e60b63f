//! Uniform selector over the vector solvers.

use std::fmt;
use std::str::FromStr;

use crate::error::{QveError, Result};
use crate::iterations::{fixed_point, functional_iteration, gauss_seidel_iteration, Splitting, SplittingSpec};
use crate::newton::{modified_newton, modified_newton_cr_form, newton, newton_cr_form};
use crate::problem::QveProblem;
use crate::report::{SolveOptions, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    FixedPoint,
    Functional(SplittingSpec),
    GaussSeidel(SplittingSpec),
    Newton,
    NewtonCr,
    ModifiedNewton,
    ModifiedNewtonCr,
}

impl Method {
    /// Solver id without the splitting: `fp1`, `funit`, `gs`, `newton`, ...
    pub fn id(&self) -> &'static str {
        match self {
            Method::FixedPoint => "fp1",
            Method::Functional(_) => "funit",
            Method::GaussSeidel(_) => "gs",
            Method::Newton => "newton",
            Method::NewtonCr => "newton-cr",
            Method::ModifiedNewton => "mnewton",
            Method::ModifiedNewtonCr => "mnewton-cr",
        }
    }

    /// Builds a method from a solver id and a splitting (used by `funit`/`gs`).
    pub fn from_id(id: &str, splitting: SplittingSpec) -> Result<Self> {
        Ok(match id {
            "fp1" => Method::FixedPoint,
            "funit" => Method::Functional(splitting),
            "gs" => Method::GaussSeidel(splitting),
            "newton" => Method::Newton,
            "newton-cr" => Method::NewtonCr,
            "mnewton" => Method::ModifiedNewton,
            "mnewton-cr" => Method::ModifiedNewtonCr,
            other => return Err(QveError::Invalid(format!("unknown solver '{other}'"))),
        })
    }

    pub fn run(&self, p: &QveProblem, opts: &SolveOptions) -> Result<SolveReport> {
        match self {
            Method::FixedPoint => fixed_point(p, opts),
            Method::Functional(spec) => {
                functional_iteration(p, &Splitting::from_spec(p, spec)?, None, opts)
            }
            Method::GaussSeidel(spec) => {
                gauss_seidel_iteration(p, &Splitting::from_spec(p, spec)?, None, opts)
            }
            Method::Newton => newton(p, opts),
            Method::NewtonCr => newton_cr_form(p, opts),
            Method::ModifiedNewton => modified_newton(p, opts),
            Method::ModifiedNewtonCr => modified_newton_cr_form(p, opts),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Functional(s) | Method::GaussSeidel(s) => write!(f, "{}[{s}]", self.id()),
            _ => f.write_str(self.id()),
        }
    }
}

/// Parses `id` or `id[splitting]`, e.g. `gs[depth+jacobi]`.
impl FromStr for Method {
    type Err = QveError;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('[') {
            Some((id, rest)) => {
                let spec = rest
                    .strip_suffix(']')
                    .ok_or_else(|| QveError::Invalid(format!("unterminated splitting in '{s}'")))?;
                Method::from_id(id, spec.parse()?)
            }
            None => Method::from_id(s, SplittingSpec::default()),
        }
    }
}
