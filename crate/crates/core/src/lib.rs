//! Quasiprobability simulation of non-local two-qubit unitary channels.
//!
//! A cut gate U = exp[i Σ θ_α σ_α⊗σ_α] is replaced by a signed mixture of
//! products of single-qubit channels, each realizable with one-qubit unitaries
//! and projective measurements. Sampling that mixture and reweighting gives an
//! unbiased estimate of ⟨O⟩ at a variance overhead of W(U)².

pub mod algebra;
pub mod analysis;
pub mod canonical;
pub mod circuit;
pub mod cli;
pub mod decomposition;
pub mod local_basis;
pub mod observable;
pub mod sampler;

use thiserror::Error;

pub use algebra::{ComplexMatrix, Ptm, QuantumState, StateVector, C64};
pub use canonical::{pauli_coefficients, PauliCoeffs, ThetaVector};
pub use circuit::{exact_expectation, Circuit, Gate};
pub use decomposition::{decompose, QpDecomposition};
pub use local_basis::BasisChannelId;
pub use observable::Observable;
pub use sampler::{estimate, plan_shots, EstimatorConfig, EstimatorResult, MeasureMode, ShotBudget};

/// Version tag written into every JSON document.
pub const FORMAT_VERSION: u32 = 1;

pub(crate) fn default_format() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Algebra(#[from] algebra::AlgebraError),
    #[error(transparent)]
    Observable(#[from] observable::ObservableError),
    #[error(transparent)]
    Canonical(#[from] canonical::CanonicalError),
    #[error(transparent)]
    LocalBasis(#[from] local_basis::LocalBasisError),
    #[error(transparent)]
    Decomposition(#[from] decomposition::DecompositionError),
    #[error(transparent)]
    Circuit(#[from] circuit::CircuitError),
    #[error(transparent)]
    Sampler(#[from] sampler::SamplerError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}
