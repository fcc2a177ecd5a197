//! Error type shared by all modules of the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across simulation, training, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates a documented constraint.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A qubit index does not address a wire of the register.
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitIndex { index: usize, n_qubits: usize },

    /// The all-zero ancilla outcome has (numerically) vanishing probability,
    /// so the post-selected state is undefined.
    #[error("post-selection failed: ancilla-zero probability {prob:.3e} is below 1e-12")]
    PostSelectionFailure { prob: f64 },

    /// Every basis-state probability of a patch is zero, so max-normalization
    /// is undefined.
    #[error("degenerate patch: all basis-state probabilities are zero")]
    DegeneratePatch,

    /// An input does not have the shape an operation requires.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A byte stream could not be decoded; `offset` is the position of the
    /// first offending byte (or line for line-oriented formats).
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// An underlying filesystem operation failed.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A failure that occurred while processing one patch of an image.
    #[error("patch {patch}: {source}")]
    Patch {
        patch: usize,
        #[source]
        source: Box<Error>,
    },

    /// A failure that aborted a training run; wraps the underlying cause and
    /// identifies where in the run it happened.
    #[error("training aborted at generator iteration {iteration} (seed {seed}): {source}")]
    Training {
        iteration: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the index of the patch being processed.
    pub fn in_patch(self, patch: usize) -> Self {
        Error::Patch {
            patch,
            source: Box::new(self),
        }
    }

    /// Wraps an error with the training iteration and seed of the run.
    pub fn in_training(self, iteration: usize, seed: u64) -> Self {
        Error::Training {
            iteration,
            seed,
            source: Box::new(self),
        }
    }

    /// Convenience constructor for [`Error::Io`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
