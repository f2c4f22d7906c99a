//! Crate-wide error type. Variants map one-to-one onto the failure modes the
//! library contracts name; the CLI maps them onto its exit-code scheme.

use crate::classifier::ClassLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Argument outside a function's mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Convolution over an empty list of distributions.
    #[error("cannot convolve an empty list of distributions")]
    EmptyDistributionList,

    /// Truncated mass too large for unbiased moments.
    #[error("tail mass {tail_mass:.3e} above truncation exceeds {limit:.1e}; moments would be biased")]
    TailTooHeavy { tail_mass: f64, limit: f64 },

    /// g2 requested for a zero-mean distribution.
    #[error("g2 is undefined for a distribution with zero mean")]
    UndefinedG2,

    /// Features requested from a histogram with zero shots.
    #[error("histogram has zero shots")]
    EmptyHistogram,

    /// A class is missing from the training split.
    #[error("class {0} is absent from the training split")]
    DegenerateDataset(ClassLabel),

    /// Class map contains no pixels above the background threshold.
    #[error("class map contains no foreground pixels")]
    NoForeground,

    /// Multi-component intensity fit ended worse than the single-component fit.
    #[error("intensity fit diverged: residual exceeds the best single-component fit")]
    FitDiverged,

    /// Measured distribution truncated below the fit range.
    #[error("distribution support ends at n={have} but the fit needs entries through n={need}")]
    InsufficientSupport { have: usize, need: usize },

    /// Distribution fit on a zero-mean input.
    #[error("measured mean photon number is zero; nothing to allocate")]
    ZeroMean,

    /// Malformed input file (schema, not I/O).
    #[error("invalid {what}: {why}")]
    InvalidFormat { what: String, why: String },

    /// Invalid scene description.
    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn format(what: impl Into<String>, why: impl Into<String>) -> Self {
        Error::InvalidFormat {
            what: what.into(),
            why: why.into(),
        }
    }
}
