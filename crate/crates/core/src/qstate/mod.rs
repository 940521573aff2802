//! Finite-dimensional states, Hermitian operators and generalized Bloch
//! vectors over the generalized Gell-Mann basis.
//!
//! Everything here is immutable after construction, so values can be shared
//! freely between trajectory workers.

mod gellmann;
mod operator;
mod state;

pub use gellmann::{bloch_decompose, gellmann_basis, BlochVector, GeneratorBasis};
pub use operator::{density_from_pure, expectation, HermitianOperator};
pub use state::{normalize, BasisKind, GridSpec, QuantumState};
