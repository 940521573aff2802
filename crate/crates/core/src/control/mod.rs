//! Feedback that cancels the measuring Hamiltonian, and the most probable
//! path of a monitored qubit with its effective Hamiltonian.

mod freeze;
mod mpp;

pub use freeze::{freeze_feedback_step, run_freeze, FreezeRun, FreezeStep};
pub use mpp::{
    bloch_density, counter_hamiltonian_check, effective_hamiltonian_mpp, most_probable_path, numerical_variance,
    CounterReport, EffectiveHamiltonianSample, Integrator, MostProbablePathParams,
};
