use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("conjugate gradient stopped after {iterations} iterations with relative residual {residual:.3e}")]
    Convergence { iterations: usize, residual: f64 },

    #[error("non-finite value encountered in {0}")]
    Numerical(&'static str),

    #[error("operator with n = {n} exceeds the dense limit of {limit} and has no fast path")]
    UnsupportedScale { n: usize, limit: usize },

    #[error("signal has no 2D shape")]
    Shape,

    #[error("operator is not full row rank (smallest singular value {0:.3e})")]
    RankDeficient(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("image error: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
