//! Dense complex linear algebra and validated quantum primitives.
//!
//! Everything here is a plain value type: matrices are row-major `Vec`s of
//! [`C64`](crate::C64), and the validated wrappers ([`Ket`], [`DensityMatrix`],
//! [`UnitaryOp`], [`OrthonormalBasis`]) check their invariants on construction.

mod linalg;
mod matrix;
pub mod random;
mod states;

pub use linalg::{
    eigh, eigvals_hermitian, min_level_gap, qr_phase_fixed, spectra_close, spectral_norm_hermitian,
    trace_norm, unitary_evolution, HermitianEigen,
};
pub use matrix::{
    apply_on_factors, contract_factor, kron, kron_vec, partial_trace, ComplexMatrix, MatrixJson,
};
pub use states::{inner, norm, DensityMatrix, Ket, OrthonormalBasis, UnitaryOp, VectorJson};

pub(crate) use matrix::strides;

/// Default validation tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Tolerance for comparisons involving eigensolver output.
pub const EIG_TOL: f64 = 1e-8;

/// Largest dense state-space dimension any module will allocate.
pub const MAX_STATE_DIM: usize = 1 << 20;
