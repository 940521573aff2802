use crate::linalg::{propagate, unitary};
use crate::measurement::{apply_measurement, sample_readout, GaussianMeasurementConfig, Readout};
use crate::qstate::{normalize, HermitianOperator, QuantumState};
use crate::reconstruction::closed_form_nlevel_h;
use crate::{rng, Result, Tolerances};

#[derive(Debug, Clone, PartialEq)]
pub struct FreezeStep {
    pub state: QuantumState,
    /// `|psi' - psi|`, what the control failed to cancel this step.
    pub defect: f64,
}

/// One step of the freeze protocol. The system evolves under
/// `exp(-i H_s dt)` and the measurement back-action for readout `r`, then the
/// controller applies `exp(+i (H_s + H_m) dt)` where `H_m` is the closed-form
/// measuring Hamiltonian at the pre-step state.
pub fn freeze_feedback_step(
    state: &QuantumState,
    h_s: &HermitianOperator,
    r: &Readout,
    cfg: &GaussianMeasurementConfig,
) -> Result<FreezeStep> {
    let h_m = closed_form_nlevel_h(state, cfg.eigenvalues(), r.r, cfg.tau())?;
    let measured = apply_measurement(state, r, cfg)?;
    let physical = propagate(h_s, measured.amplitudes(), cfg.dt());
    let total = h_s + &h_m;
    let controlled = normalize(&state.with_amplitudes(propagate(&total, &physical, -cfg.dt()))?)?;
    let defect = (controlled.amplitudes() - state.amplitudes()).norm();
    Ok(FreezeStep { state: controlled, defect })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreezeRun {
    pub final_state: QuantumState,
    /// Largest `|psi(t) - psi(0)|` over the run.
    pub max_drift: f64,
    /// Largest population reached by any basis state.
    pub max_population: f64,
    /// Whether the collapse threshold was crossed.
    pub collapsed: bool,
    pub steps: usize,
}

/// Runs `steps` steps with readouts sampled from the current state, with the
/// controller on or off.
///
/// Sampled readouts have variance `tau/dt`, so the per-step residual is not
/// `O(dt^2)` here: it is `O((dt/tau)^{3/2})` at the equal superposition of two
/// levels and `O(dt/tau)` elsewhere, where the second-order part of the
/// measurement map is not generated by any Hamiltonian.
pub fn run_freeze(
    initial: &QuantumState,
    h_s: &HermitianOperator,
    cfg: &GaussianMeasurementConfig,
    seed: u64,
    steps: usize,
    control: bool,
) -> Result<FreezeRun> {
    let start = normalize(initial)?;
    let mut state = start.clone();
    let mut rng = rng::stream(seed);
    let u_s = unitary(h_s, cfg.dt());
    let mut max_drift: f64 = 0.0;
    let mut max_population = state.max_population().1;
    for k in 1..=steps {
        let r = sample_readout(&state, cfg, k as f64 * cfg.dt(), &mut rng);
        state = if control {
            freeze_feedback_step(&state, h_s, &r, cfg)?.state
        } else {
            let measured = apply_measurement(&state, &r, cfg)?;
            normalize(&state.with_amplitudes(&u_s * measured.amplitudes())?)?
        };
        max_drift = max_drift.max((state.amplitudes() - start.amplitudes()).norm());
        max_population = max_population.max(state.max_population().1);
    }
    Ok(FreezeRun {
        final_state: state,
        max_drift,
        max_population,
        collapsed: max_population > Tolerances::DEFAULT.collapse_threshold,
        steps,
    })
}
