//! Discrete-time entangled history simulation.
//!
//! A system observed at instants `t0 < t1 < ... < tN` is described by a single
//! vector in the tensor product of per-instant copies of its Hilbert space.
//! The leftmost tensor factor is always the latest instant, so a two-instant
//! history reads `|later> ⊙ |earlier>`.
//!
//! Modules:
//!
//! * [`qcore`]: dense complex matrices and validated quantum primitives.
//! * [`history`]: history states, bridge operators and temporal marginals.
//! * [`channels`]: Choi matrices and two-instant history operators for channels.
//! * [`monitor`]: the ancilla-based circuit that writes a history into monitor qubits.
//! * [`tempcorr`]: two-time pointer readout, sequential measurements, Leggett-Garg correlators.
//! * [`uncertainty`]: instant discrimination versus energy spread.

pub mod channels;
pub mod error;
pub mod history;
pub mod monitor;
pub mod qcore;
pub mod tempcorr;
pub mod uncertainty;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Version string recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
