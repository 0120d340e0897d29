//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside its documented domain.
    #[error("invalid {what}: {details}")]
    InvalidParameter { what: &'static str, details: String },

    /// Matrix shapes do not line up.
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    /// A size guard refused a computation that would not finish at desk scale.
    #[error("size guard exceeded for {what}: {details}")]
    SizeGuard { what: &'static str, details: String },

    /// The sample variance is indistinguishable from zero, so the standardized
    /// statistic does not exist. Carries the raw traces so callers can inspect
    /// the degenerate batch; this is a meaningful outcome for profiles whose
    /// support admits no closed walk of the requested length.
    #[error("sample variance is numerically zero across {} replicas", raw_traces.len())]
    StructuralZeroVariance { raw_traces: Vec<f64> },

    /// The cycle sum in the bound's denominator vanishes, so the bound carries
    /// no information for this (profile, degree) pair.
    #[error("bound is vacuous: S_{k} = 0 for this profile")]
    BoundVacuous { k: usize },

    /// An operation that assumes a symmetric unit-variance law was handed a
    /// law that does not satisfy those hypotheses.
    #[error("law '{name}' not admissible here: {reason}")]
    NonCompliantLaw { name: String, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Text-format parse failure with a line number for diagnostics.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, details: impl Into<String>) -> Self {
        Error::InvalidParameter {
            what,
            details: details.into(),
        }
    }
}
