use thiserror::Error;

/// Errors raised by the numerical kernels.
///
/// The CLI maps [`Error::InvalidInput`] and [`Error::Parse`] to exit status 2
/// and every other variant to exit status 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: invalid input: {reason}")]
    InvalidInput { op: &'static str, reason: String },

    #[error("{op}: difference of magnitudes is negative")]
    NegativeDifference { op: &'static str },

    #[error("{op}: running value keeps growing ({detail})")]
    Divergence { op: &'static str, detail: String },

    #[error("{op}: iteration did not converge (residual {residual:e})")]
    NonConvergence { op: &'static str, residual: f64 },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn invalid(op: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            op,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's configuration rather than by the computation.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidInput { .. } | Error::Parse { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
