//! Simulation of continuous wave-function collapse under Gaussian weak
//! measurement, and reconstruction of the state-dependent Hamiltonian that
//! generates each collapse trajectory.
//!
//! The crate is organized bottom-up:
//!
//! * [`qstate`]: dense states, Hermitian operators and generalized Bloch vectors.
//! * [`measurement`]: Gaussian measurement operators, readout sampling and state updates.
//! * [`reconstruction`]: the inverse problem (trajectory to Hamiltonian), closed forms,
//!   energy variances and the kernel space of equivalent Hamiltonians.
//! * [`trajectory`]: stochastic trajectories, ensembles, the oscillator grid run,
//!   dual-axis monitoring and Bayesian tracking of mixed ensembles.
//! * [`control`]: freeze feedback and the monitored-qubit most probable path.
//! * [`io`]: configuration parsing, record formats and the command runner.

// Guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod qstate;
pub mod reconstruction;
pub mod rng;
pub mod tolerance;
pub mod trajectory;

pub use error::{Error, Result};
pub use qstate::{BasisKind, BlochVector, GeneratorBasis, GridSpec, HermitianOperator, QuantumState};
pub use tolerance::Tolerances;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
