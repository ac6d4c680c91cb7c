use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated (bad mode, shape mismatch,
    /// out-of-range neighbor count, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data violated the nonnegativity requirement of a solver.
    #[error("negative entry {value} at linear index {index}")]
    NegativeEntry { index: usize, value: f64 },

    /// A factor column collapsed to zero and can no longer be normalized.
    #[error("degenerate rank: column {column} has zero sum{}", iteration.map(|i| format!(" (iteration {i})")).unwrap_or_default())]
    DegenerateRank {
        column: usize,
        iteration: Option<usize>,
    },

    /// The Laplacian spectrum does not carry enough nonzero eigenvalues for
    /// the requested embedding dimension.
    #[error("degenerate spectrum: {components} connected components leave only {available} nonzero eigenvalues, {requested} requested")]
    DegenerateSpectrum {
        components: usize,
        available: usize,
        requested: usize,
    },

    /// A numeric routine failed irrecoverably (singular system, no convergence).
    #[error("numeric failure at point {point}: {detail}")]
    NumericFailure { point: usize, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
