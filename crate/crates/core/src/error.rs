use thiserror::Error;

/// Errors shared across the crate.
///
/// Optimizer divergence is deliberately not an error: runs that blow up are
/// reported through trace status so partial results survive. See
/// [`crate::extrapolation::RunStatus`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Factorization of the regularized system failed even after one jitter
    /// retry. Happens only for lambda = 0 on rank-deficient residuals.
    #[error("regularized system is singular at lambda = {lambda:e}")]
    SingularSystem { lambda: f64 },

    /// The normalizing sum 1'z vanished, so weights cannot be rescaled to
    /// sum to one.
    #[error("degenerate normalization: 1'z = {sum:e}")]
    DegenerateNormalization { sum: f64 },

    /// Every candidate in a grid search produced a non-finite objective.
    #[error("objective non-finite at all {candidates} grid-search candidates")]
    AllCandidatesInvalid { candidates: usize },

    /// The acceleration bound's radicand went negative: the queried
    /// (kappa, k, lambda) regime does not admit the bound.
    #[error("acceleration bound radicand is negative ({0:e})")]
    InvalidRegime(f64),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Bails out with [`Error::InvalidInput`] unless `cond` holds.
macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !($cond) {
            return Err(crate::error::Error::InvalidInput(format!($($arg)*)));
        }
    };
}
pub(crate) use ensure;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_carries_context() {
        let e = Error::SingularSystem { lambda: 0.0 };
        assert!(e.to_string().contains("lambda = 0"));
        let e = Error::Parse {
            path: "data.txt".into(),
            line: 7,
            msg: "bad index".into(),
        };
        assert_eq!(e.to_string(), "data.txt:7: bad index");
    }

    #[test]
    fn ensure_macro_short_circuits() {
        fn check(x: f64) -> crate::error::Result<f64> {
            ensure!(x > 0.0, "x must be positive, got {x}");
            Ok(x.sqrt())
        }
        assert!(check(4.0).is_ok());
        let err = check(-1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }
}
