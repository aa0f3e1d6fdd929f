use thiserror::Error;

/// Error conditions surfaced by the library.
///
/// Domain violations are reported as errors rather than silently propagated
/// as NaN.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a special function.
    #[error("domain error in {context}: {message}")]
    Domain {
        context: &'static str,
        message: String,
    },

    /// Evaluation at a pole.
    #[error("pole encountered in {0}")]
    Pole(&'static str),

    /// A bracketing root search failed; usually a non-monotone custom
    /// trajectory.
    #[error("root bracketing failed for {context} at target {target}")]
    BracketFailed { context: &'static str, target: f64 },

    /// An iterative scheme did not reach its tolerance.
    #[error("{context} did not converge: residual {residual:.3e} (tolerance {tolerance:.3e})")]
    NoConvergence {
        context: &'static str,
        residual: f64,
        tolerance: f64,
    },

    /// Frequency cutoffs ordered or sized inconsistently.
    #[error("invalid cutoffs: {0}")]
    Cutoff(String),

    /// A matrix that must be positive semidefinite is not.
    #[error("{context}: matrix not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd {
        context: &'static str,
        min_eigenvalue: f64,
    },

    /// Physically invalid input (superluminal trajectory, unphysical state).
    #[error("unphysical input: {0}")]
    Unphysical(String),

    /// Invalid argument that is not a special-function domain issue.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn domain(context: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            context,
            message: message.into(),
        }
    }
}
