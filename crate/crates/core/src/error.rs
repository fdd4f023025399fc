use std::io;

/// Errors raised by the imaging toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or operation received an argument violating its invariant.
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: &'static str, reason: String },

    /// Inconsistent combination of otherwise valid settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// `|kx| > k` under the exact dispersion relation.
    #[error("evanescent wave: |kx| = {kx} exceeds k = {k}")]
    Evanescent { k: f64, kx: f64 },

    /// The rational dispersion approximation hits `1 - beta*s^2 = 0`.
    #[error("rational dispersion pole at s = {s}")]
    DispersionPole { s: f64 },

    /// A migration step produced a NaN or infinity.
    #[error("non-finite value at step {step}, row {row}")]
    NonFinite { step: usize, row: usize },

    /// An inner iterative solve did not reach its tolerance.
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e}) in outer iteration {outer}")]
    SolverDiverged {
        outer: usize,
        iterations: usize,
        residual: f64,
    },

    /// No local maximum found where one was requested.
    #[error("not found: {0}")]
    NotFound(String),

    /// Malformed file content.
    #[error("parse error at byte offset {offset}: {reason}")]
    Parse { offset: u64, reason: String },

    /// File does not start with the expected magic string.
    #[error("bad magic {found:?}, expected {expected:?}")]
    BadMagic { found: String, expected: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::SolverDiverged { .. } | Error::DispersionPole { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
