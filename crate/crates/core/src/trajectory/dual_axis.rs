use nalgebra::DVector;

use super::{run_trajectory, StopCondition, TrajectoryRecord};
use crate::measurement::{apply_measurement, sample_readout, GaussianMeasurementConfig, Readout};
use crate::qstate::{normalize, QuantumState};
use crate::reconstruction::TrajectorySample;
use crate::{rng, Error, Result, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct DualAxisRecord {
    /// Samples after each full step; the attached readouts are the z readouts.
    pub record: TrajectoryRecord,
    /// Readouts of the x measurement, one per full step.
    pub x_readouts: Vec<Readout>,
}

impl DualAxisRecord {
    /// First sample time at which `|a_index|^2` drops below `1 - tol`.
    pub fn escape_time(&self, index: usize, tol: f64) -> Option<f64> {
        self.record.samples.iter().find(|s| s.state.populations()[index] < 1.0 - tol).map(|s| s.t)
    }
}

fn hadamard(v: &DVector<C64>) -> DVector<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_vec(vec![(v[0] + v[1]) * s, (v[0] - v[1]) * s])
}

/// Qubit measured alternately along z and x, each for half of `cfg_z.dt`.
/// The x step is the z-type measurement of `cfg_x` applied in the Hadamard
/// frame. With `cfg_x = None` this is exactly [`run_trajectory`] with the
/// default collapse stop; otherwise the run lasts `t_max` with no stop.
pub fn dual_axis_trajectory(
    initial: &QuantumState,
    cfg_z: &GaussianMeasurementConfig,
    cfg_x: Option<&GaussianMeasurementConfig>,
    seed: u64,
    t_max: f64,
) -> Result<DualAxisRecord> {
    let Some(cfg_x) = cfg_x else {
        let mut stop = StopCondition::for_tau(cfg_z.tau());
        stop.t_max = t_max;
        let record = run_trajectory(initial, cfg_z, seed, stop)?;
        return Ok(DualAxisRecord { record, x_readouts: Vec::new() });
    };
    for cfg in [cfg_z, cfg_x] {
        if cfg.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: cfg.dim() });
        }
    }
    if cfg_x.dt() != cfg_z.dt() {
        return Err(Error::InvalidConfig("z and x measurements must share dt".into()));
    }
    let dt = cfg_z.dt();
    let half_z = cfg_z.with_dt(0.5 * dt)?;
    let half_x = cfg_x.with_dt(0.5 * dt)?;
    let mut rng = rng::stream(seed);
    let mut state = normalize(initial)?;
    let mut samples = vec![TrajectorySample { t: 0.0, state: state.clone(), readout: None }];
    let mut x_readouts = Vec::new();
    let steps = StopCondition::fixed_time(t_max).max_steps(dt);
    for k in 1..=steps {
        let t = k as f64 * dt;
        let rz = sample_readout(&state, &half_z, t - 0.5 * dt, &mut rng);
        state = apply_measurement(&state, &rz, &half_z)?;
        let rotated = state.with_amplitudes(hadamard(state.amplitudes()))?;
        let rx = sample_readout(&rotated, &half_x, t, &mut rng);
        let rotated = apply_measurement(&rotated, &rx, &half_x)?;
        state = normalize(&rotated.with_amplitudes(hadamard(rotated.amplitudes()))?)?;
        samples.push(TrajectorySample { t, state: state.clone(), readout: Some(rz) });
        x_readouts.push(rx);
    }
    Ok(DualAxisRecord { record: TrajectoryRecord { seed, samples, reconstructions: None, outcome: None }, x_readouts })
}
