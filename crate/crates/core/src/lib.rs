//! Multiple-quantum-coherence spectra of non-Hermitian Hamiltonians.
//!
//! The pipeline is: build a Hamiltonian ([`models`]), diagonalize it into a
//! biorthogonal eigensystem ([`linalg`]), select a state, decompose it by
//! coherence order relative to a Hermitian reference observable
//! ([`coherence`]), and sweep parameters ([`experiments`]). [`oracles`] holds
//! closed-form results for validation and [`protocol`] simulates retrieval of
//! the intensities from a phase-encoded fidelity signal.

pub mod coherence;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod models;
pub mod oracles;
pub mod protocol;
pub mod validation;

pub use error::{MqcError, Result};
