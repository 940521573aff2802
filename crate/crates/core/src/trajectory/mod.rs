//! Stochastic collapse trajectories and everything built from them.

mod dual_axis;
mod ensemble;
mod mixed;
mod oscillator;
mod replay;

pub use dual_axis::{dual_axis_trajectory, DualAxisRecord};
pub use ensemble::{run_ensemble, EnsembleStats};
pub use mixed::{bayesian_mixed_update, run_mixed, MixedEnsemble, MixedRun};
pub use oscillator::{
    oscillator_trajectory, position_variance_law, GaussianMoments, OscillatorRun, OscillatorRunConfig,
};
pub use replay::{replay_consistency, ReplayReport};

use rand::Rng;

use crate::measurement::{apply_measurement, sample_readout, GaussianMeasurementConfig, Readout};
use crate::qstate::{normalize, QuantumState};
use crate::reconstruction::{reconstruct_series, ReconstructionResult, TrajectorySample};
use crate::rng;
use crate::{Result, Tolerances};

/// When to stop a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCondition {
    pub t_max: f64,
    /// A trajectory counts as collapsed once some population exceeds this.
    /// Values `>= 1` disable the check.
    pub collapse_threshold: f64,
}

impl StopCondition {
    /// Cap at `50 tau` with the default collapse threshold.
    pub fn for_tau(tau: f64) -> Self {
        Self { t_max: 50.0 * tau, collapse_threshold: Tolerances::DEFAULT.collapse_threshold }
    }

    /// Run for `t_max` regardless of collapse.
    pub fn fixed_time(t_max: f64) -> Self {
        Self { t_max, collapse_threshold: f64::INFINITY }
    }

    fn max_steps(&self, dt: f64) -> usize {
        (self.t_max / dt).round().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub seed: u64,
    pub samples: Vec<TrajectorySample>,
    /// Filled by [`TrajectoryRecord::reconstruct`].
    pub reconstructions: Option<Vec<ReconstructionResult>>,
    /// Index of the eigenstate reached, if the run collapsed.
    pub outcome: Option<usize>,
}

impl TrajectoryRecord {
    pub fn readouts(&self) -> Vec<Readout> {
        self.samples.iter().filter_map(|s| s.readout).collect()
    }

    pub fn final_state(&self) -> &QuantumState {
        &self.samples.last().expect("records always hold the initial sample").state
    }

    /// Time at which the last sample was taken.
    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Computes the measuring Hamiltonian at every sample.
    pub fn reconstruct(&mut self) -> Result<&[ReconstructionResult]> {
        if self.reconstructions.is_none() {
            self.reconstructions = Some(reconstruct_series(&self.samples)?);
        }
        Ok(self.reconstructions.as_deref().unwrap_or_default())
    }
}

fn collapsed(state: &QuantumState, threshold: f64) -> Option<usize> {
    let (i, p) = state.max_population();
    (p > threshold).then_some(i)
}

pub(crate) fn run_with_rng<R: Rng + ?Sized>(
    initial: &QuantumState,
    cfg: &GaussianMeasurementConfig,
    seed: u64,
    stop: StopCondition,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    let mut state = normalize(initial)?;
    let dt = cfg.dt();
    let mut samples = vec![TrajectorySample { t: 0.0, state: state.clone(), readout: None }];
    let mut outcome = None;
    for k in 1..=stop.max_steps(dt) {
        let t = k as f64 * dt;
        let readout = sample_readout(&state, cfg, t, rng);
        state = apply_measurement(&state, &readout, cfg)?;
        samples.push(TrajectorySample { t, state: state.clone(), readout: Some(readout) });
        outcome = collapsed(&state, stop.collapse_threshold);
        if outcome.is_some() {
            break;
        }
    }
    Ok(TrajectoryRecord { seed, samples, reconstructions: None, outcome })
}

/// Repeated sampled measurement from `initial` until collapse or `t_max`.
/// Deterministic in `seed`.
pub fn run_trajectory(
    initial: &QuantumState,
    cfg: &GaussianMeasurementConfig,
    seed: u64,
    stop: StopCondition,
) -> Result<TrajectoryRecord> {
    run_with_rng(initial, cfg, seed, stop, &mut rng::stream(seed))
}

/// Trajectory driven by a prescribed readout sequence, one step per readout.
pub fn run_with_readouts(
    initial: &QuantumState,
    cfg: &GaussianMeasurementConfig,
    readouts: &[f64],
) -> Result<TrajectoryRecord> {
    let mut state = normalize(initial)?;
    let mut samples = vec![TrajectorySample { t: 0.0, state: state.clone(), readout: None }];
    for (k, &r) in readouts.iter().enumerate() {
        let readout = Readout::new(r, (k + 1) as f64 * cfg.dt());
        state = apply_measurement(&state, &readout, cfg)?;
        samples.push(TrajectorySample { t: readout.t, state: state.clone(), readout: Some(readout) });
    }
    let outcome = collapsed(&state, Tolerances::DEFAULT.collapse_threshold);
    Ok(TrajectoryRecord { seed: 0, samples, reconstructions: None, outcome })
}
