use serde::{Deserialize, Serialize};

use super::TrajectoryRecord;
use crate::linalg::propagate;
use crate::reconstruction::{consistent_phase_rate, reconstruct_hamiltonian, tangent_projection, time_derivative};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    /// `1 - |<U psi_k|psi_{k+1}>|^2` maximized over interior steps.
    pub max_infidelity: f64,
    /// Phase-insensitive distance `min_phi |U psi_k - e^{i phi} psi_{k+1}|` per interior step.
    pub step_defects: Vec<f64>,
}

impl ReplayReport {
    pub fn max_defect(&self) -> f64 {
        self.step_defects.iter().copied().fold(0.0, f64::max)
    }
}

/// Regenerates each interior step of a record from the reconstructed
/// Hamiltonian alone: `psi_{k+1}` is compared with `exp(-i H_k dt) psi_k`.
pub fn replay_consistency(record: &TrajectoryRecord) -> Result<ReplayReport> {
    let samples = &record.samples;
    if samples.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: samples.len() });
    }
    let mut max_infidelity: f64 = 0.0;
    let mut step_defects = Vec::with_capacity(samples.len() - 2);
    for k in 1..samples.len() - 1 {
        let state = &samples[k].state;
        let d = tangent_projection(state, &time_derivative(samples, k)?.value);
        let h = reconstruct_hamiltonian(state, &d, consistent_phase_rate(state, &d))?.h;
        let moved = propagate(&h, state.amplitudes(), samples[k + 1].t - samples[k].t);
        let target = samples[k + 1].state.amplitudes();
        let overlap = target.dotc(&moved);
        let magnitude = overlap.norm().min(1.0);
        max_infidelity = max_infidelity.max(1.0 - magnitude * magnitude);
        let phase = if magnitude > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
        step_defects.push((moved - target * phase).norm());
    }
    Ok(ReplayReport { max_infidelity, step_defects })
}
