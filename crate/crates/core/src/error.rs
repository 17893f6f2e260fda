use thiserror::Error;

/// Errors raised by the simulation, reward and learning layers.
#[derive(Debug, Error)]
pub enum DqsError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("site {site} out of range for {n_qubits} qubits")]
    SiteOutOfRange { site: usize, n_qubits: usize },

    #[error("invalid site pair ({0}, {1}): need j < k < N")]
    InvalidPair(usize, usize),

    #[error("operation needs at least {required} qubits, got {actual}")]
    TooFewQubits { required: usize, actual: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no Trotter decomposition for the {0} model")]
    NoTrotterDecomposition(&'static str),

    #[error("dense evolution refused for {n_qubits} qubits (cap {cap})")]
    DenseTooLarge { n_qubits: usize, cap: usize },

    #[error("krylov propagation failed: {0}")]
    Krylov(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, DqsError>;
