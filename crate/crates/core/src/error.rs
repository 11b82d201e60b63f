use thiserror::Error;

/// Errors raised while building problems or running the linear-algebra kernels.
///
/// Solver breakdowns are not errors: they are reported through
/// [`crate::Status`] together with the offending iterate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QveError {
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("positive off-diagonal entry at ({i},{j}): {value}")]
    NotZMatrix { i: usize, j: usize, value: f64 },

    #[error("matrix is not a nonsingular M-matrix ({0})")]
    NotMMatrix(String),

    #[error("singular factorization: zero pivot at index {pivot}")]
    SingularFactorization { pivot: usize },

    #[error("negative entry {value} at {index} in {what}")]
    Negative {
        what: &'static str,
        index: String,
        value: f64,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("starting point is not admissible: {0}")]
    BadStart(String),

    #[error("no solution certified (A1 presumed violated): {0}")]
    NoSolution(String),
}

pub type Result<T, E = QveError> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(QveError::Dimension {
            what,
            expected,
            got,
        });
    }
    Ok(())
}
