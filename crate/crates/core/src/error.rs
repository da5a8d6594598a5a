use thiserror::Error;

/// Errors raised by histlab operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("non-finite matrix entry at flat index {0}")]
    NonFinite(usize),
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not unitary (max |U†U - I| = {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("vectors are not orthonormal (max |<v_i|v_j> - δ_ij| = {residual:.3e})")]
    NotOrthonormal { residual: f64 },
    #[error("index {index} out of range for {context} (length {len})")]
    IndexOutOfRange {
        context: String,
        index: usize,
        len: usize,
    },
    #[error("state space dimension {dim} exceeds the limit {limit}")]
    TooLarge { dim: usize, limit: usize },
    #[error("invalid channel: {0}")]
    Channel(String),
    #[error("post-selection has zero probability ({prob:.3e})")]
    ZeroProbability { prob: f64 },
    #[error("pointer lattice of dimension {dim} is too small: {reason}")]
    LatticeTooSmall { dim: usize, reason: String },
    #[error("observable eigenvalues must all be ±1 (found {found})")]
    NotDichotomic { found: f64 },
    #[error("Hamiltonian is degenerate (smallest level gap {gap:.3e})")]
    Degenerate { gap: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_mismatch(context: impl Into<String>, expected: usize, found: usize) -> Error {
    Error::DimensionMismatch {
        context: context.into(),
        expected,
        found,
    }
}
