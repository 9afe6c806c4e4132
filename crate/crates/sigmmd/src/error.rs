//! Error type shared by all modules of the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by tensor algebra, kernel, and test-statistic routines.
///
/// Structural errors ([`Error::DimensionMismatch`], [`Error::LevelMismatch`],
/// [`Error::InvalidArgument`]) indicate misuse of the API and map to
/// configuration failures at the CLI boundary. [`Error::RootFinding`] and
/// [`Error::Numerical`] indicate that a computation could not be completed to
/// the requested accuracy.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two operands live in tensor algebras or vector spaces of different
    /// dimension.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// Two tensor-algebra operands carry different truncation levels.
    /// Operands are never promoted implicitly; truncate explicitly instead.
    #[error("truncation level mismatch: {left} vs {right}")]
    LevelMismatch { left: usize, right: usize },

    /// A scalar or structural argument is outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The bracketing root finder did not converge; carries the final
    /// bracket so the failure can be diagnosed.
    #[error("root finder did not converge within {max_iter} iterations; bracket [{lo}, {hi}]")]
    RootFinding { lo: f64, hi: f64, max_iter: usize },

    /// A numerical result left its valid range (NaN/inf contamination,
    /// a squared norm that came out significantly negative, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of a numerical procedure (as opposed to misuse of
    /// the API). CLI frontends use this to pick exit codes.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::RootFinding { .. } | Error::Numerical(_))
    }
}
