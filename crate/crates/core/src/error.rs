use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{requested} qubits exceeds the configured cap of {cap}")]
    TooManyQubits { requested: usize, cap: usize },

    #[error("lattice carries {lattice:?} DMI vectors but the model asks for {model:?}")]
    DmiModeMismatch {
        lattice: Option<crate::lattice::DmiMode>,
        model: crate::lattice::DmiMode,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not Hermitian: imaginary expectation residue {0:e}")]
    NonHermitian(f64),

    #[error("invalid qubit index {qubit} for a {n_qubits}-qubit register")]
    InvalidQubit { qubit: usize, n_qubits: usize },

    #[error("control and target must differ (both {0})")]
    SameControlTarget(usize),

    #[error("degenerate triangle ({0}, {1}, {2})")]
    DegenerateTriangle(usize, usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("Lanczos did not converge after {matvecs} matrix-vector products (best residual {best_residual:e})")]
    NotConverged { matvecs: usize, best_residual: f64 },

    #[error("optimizer failure: {0}")]
    Optimizer(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
