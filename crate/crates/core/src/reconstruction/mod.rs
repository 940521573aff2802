//! The inverse problem: from a state trajectory to a Hamiltonian that drives it.
//!
//! Given `psi(t)` and its time derivative, the Hermitian generator
//! `H = i(|d psi~><psi~| - |psi~><d psi~|) + phi' I` (with the gauge
//! `psi~ = e^{i phi} psi` removing the component of `d psi` along `psi`)
//! satisfies `H psi = i d psi`. Closed forms for the Gaussian measurement
//! models live in [`closed_form`]; the family of all equivalent generators in
//! [`kernel`].

pub mod closed_form;
pub mod kernel;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::measurement::{apply_measurement, invert_measurement, GaussianMeasurementConfig, Readout};
use crate::qstate::{HermitianOperator, QuantumState};
use crate::{Error, Result, Tolerances, C64};

pub use closed_form::{
    closed_form_nlevel_h, closed_form_position_h, closed_form_qubit_h, energy_uncertainty_position,
    energy_variance_nlevel,
};
pub use kernel::{equivalent_hamiltonian, kernel_space_basis, KernelSpace};

/// One point of a quantum trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: QuantumState,
    /// Readout that produced this sample from the previous one.
    pub readout: Option<Readout>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseMethod {
    Trapezoid,
}

/// Running global phase `phi(t) = int phi'(t) dt`, starting at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseAccumulator {
    pub phi: f64,
    pub method: PhaseMethod,
    last: Option<(f64, f64)>,
}

impl Default for PhaseAccumulator {
    fn default() -> Self {
        Self { phi: 0.0, method: PhaseMethod::Trapezoid, last: None }
    }
}

impl PhaseAccumulator {
    /// Adds the rate observed at time `t` and returns the updated phase.
    pub fn advance(&mut self, t: f64, rate: f64) -> f64 {
        if let Some((t0, r0)) = self.last {
            self.phi += 0.5 * (rate + r0) * (t - t0);
        }
        self.last = Some((t, rate));
        self.phi
    }
}

/// Phase rate `phi' = -i <d psi|psi>` that makes the reconstruction exact.
pub fn consistent_phase_rate(state: &QuantumState, dstate: &DVector<C64>) -> f64 {
    -state.amplitudes().dotc(dstate).im
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub h: HermitianOperator,
    /// Instantaneous energy uncertainty.
    pub dh: f64,
    /// `|H psi - i d psi|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeEstimate {
    pub value: DVector<C64>,
    /// First-order one-sided difference at an endpoint.
    pub one_sided: bool,
}

/// Finite-difference `d psi/dt` at sample `k`: central in the interior, one-sided
/// at the two endpoints. Uses the actual sample spacing.
pub fn time_derivative(series: &[TrajectorySample], k: usize) -> Result<DerivativeEstimate> {
    if series.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: series.len() });
    }
    if k >= series.len() {
        return Err(Error::IndexOutOfRange { index: k, len: series.len() });
    }
    let (lo, hi, one_sided) = match k {
        0 => (0, 1, true),
        k if k == series.len() - 1 => (k - 1, k, true),
        k => (k - 1, k + 1, false),
    };
    for j in lo..hi {
        if !(series[j + 1].t > series[j].t) {
            return Err(Error::DuplicateTime(j + 1));
        }
    }
    let (a, b) = (&series[lo], &series[hi]);
    if a.state.dim() != b.state.dim() {
        return Err(Error::DimensionMismatch { expected: a.state.dim(), got: b.state.dim() });
    }
    let dt = b.t - a.t;
    let value = (b.state.amplitudes() - a.state.amplitudes()).unscale(dt);
    Ok(DerivativeEstimate { value, one_sided })
}

/// Builds the generator for `(psi, d psi)` with the given phase rate.
pub fn reconstruct_hamiltonian(
    state: &QuantumState,
    dstate: &DVector<C64>,
    phase_rate: f64,
) -> Result<ReconstructionResult> {
    if dstate.len() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: dstate.len() });
    }
    let psi = state.amplitudes();
    let overlap = psi.dotc(dstate);
    let scale = dstate.norm().max(1.0);
    if overlap.re.abs() > Tolerances::DEFAULT.inconsistent_input * scale {
        return Err(Error::InconsistentInput(overlap.re));
    }
    let chi = dstate + psi * C64::new(0.0, phase_rate);
    let i = C64::new(0.0, 1.0);
    let mut m: DMatrix<C64> = (&chi * psi.adjoint() - psi * chi.adjoint()) * i;
    for d in 0..m.nrows() {
        m[(d, d)] += C64::new(phase_rate, 0.0);
    }
    let h = HermitianOperator::symmetrized(m);
    let residual = (h.apply(psi) - dstate * i).norm();
    let dh = (dstate.norm_squared() - overlap.norm_sqr()).max(0.0).sqrt();
    Ok(ReconstructionResult { h, dh, residual })
}

/// Removes the `Re <psi|d>` component of a finite-difference derivative. The
/// exact derivative of a normalized state has none; differences of sampled
/// states carry one of the size of the squared step.
pub fn tangent_projection(state: &QuantumState, d: &DVector<C64>) -> DVector<C64> {
    let psi = state.amplitudes();
    d - psi * C64::new(psi.dotc(d).re, 0.0)
}

/// Reconstruction at every sample of a series, with the phase-rate convention
/// `phi' = 0` used for Gaussian measurement records. Derivatives are
/// projected with [`tangent_projection`] first.
pub fn reconstruct_series(series: &[TrajectorySample]) -> Result<Vec<ReconstructionResult>> {
    (0..series.len())
        .map(|k| {
            let d = time_derivative(series, k)?;
            let state = &series[k].state;
            reconstruct_hamiltonian(state, &tangent_projection(state, &d.value), 0.0)
        })
        .collect()
}

/// Reconstructs the measuring Hamiltonian of a single measurement step from
/// the measurement map itself: the forward neighbour is `M psi` and the
/// backward neighbour `M^{-1} psi` for the same readout, giving a central
/// difference accurate to `O(dt^2)`.
pub fn measurement_step_hamiltonian(
    state: &QuantumState,
    r: f64,
    cfg: &GaussianMeasurementConfig,
) -> Result<ReconstructionResult> {
    let readout = Readout::new(r, 0.0);
    let dt = cfg.dt();
    let series = [
        TrajectorySample { t: -dt, state: invert_measurement(state, &readout, cfg)?, readout: None },
        TrajectorySample { t: 0.0, state: state.clone(), readout: None },
        TrajectorySample { t: dt, state: apply_measurement(state, &readout, cfg)?, readout: Some(readout) },
    ];
    let d = time_derivative(&series, 1)?;
    reconstruct_hamiltonian(state, &d.value, 0.0)
}

/// Defects of the power identities of a reconstructed generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIdentityReport {
    /// `<d psi|d psi>` of the gauge-fixed derivative.
    pub omega_sq: f64,
    /// `|H^2 - (|d psi><d psi| + omega^2 |psi><psi|)|`, spectral norm.
    pub square_defect: f64,
    /// `|H^3 - omega^2 H|`, spectral norm.
    pub cube_defect: f64,
}

impl PowerIdentityReport {
    pub fn max_defect(&self) -> f64 {
        self.square_defect.max(self.cube_defect)
    }
}

/// Checks `H^2 = |d psi><d psi| + omega^2 |psi><psi|` and `H^3 = omega^2 H` for
/// the zero-phase-rate generator. Any imaginary component of `<psi|d psi>` is
/// first moved into the gauge (`d psi -> d psi - <psi|d psi> psi`), which is
/// the derivative of `psi~`.
pub fn power_identity_check(state: &QuantumState, dstate: &DVector<C64>) -> Result<PowerIdentityReport> {
    if dstate.len() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: dstate.len() });
    }
    let psi = state.amplitudes();
    let d = dstate - psi * psi.dotc(dstate);
    let h = reconstruct_hamiltonian(state, &d, 0.0)?.h;
    let omega_sq = d.norm_squared();
    let hm = h.matrix();
    let h2 = hm * hm;
    let expected2 = &d * d.adjoint() + psi * psi.adjoint() * C64::new(omega_sq, 0.0);
    let cube = &h2 * hm - hm * C64::new(omega_sq, 0.0);
    Ok(PowerIdentityReport {
        omega_sq,
        square_defect: HermitianOperator::symmetrized(h2 - expected2).operator_norm(),
        cube_defect: HermitianOperator::symmetrized(cube).operator_norm(),
    })
}
