//! Gaussian weak measurements.
//!
//! A measurement of strength `1/tau` over a step `dt` acts diagonally in the
//! pointer basis with weights `(dt/2 pi tau)^{1/4} exp[-(dt/4tau)(r - lambda_i)^2]`.
//! The same machinery covers qubits, `n`-level systems and position grids (where
//! the grid coordinates play the role of the pointer values).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::qstate::{BasisKind, GridSpec, HermitianOperator, QuantumState};
use crate::rng::{categorical, standard_normal};
use crate::{Error, Result, Tolerances, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMeasurementConfig {
    tau: f64,
    dt: f64,
    eigenvalues: Vec<f64>,
}

impl GaussianMeasurementConfig {
    pub fn new(tau: f64, dt: f64, eigenvalues: Vec<f64>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidConfig(format!("tau must be positive and finite, got {tau}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive and finite, got {dt}")));
        }
        if eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidConfig("eigenvalues must be finite".into()));
        }
        let distinct = eigenvalues.iter().any(|&l| l != eigenvalues[0]);
        if eigenvalues.len() < 2 || !distinct {
            return Err(Error::InvalidConfig("at least two distinct eigenvalues are required".into()));
        }
        Ok(Self { tau, dt, eigenvalues })
    }

    /// `sigma_z` measurement, pointer values `(+1, -1)`.
    pub fn qubit_z(tau: f64, dt: f64) -> Result<Self> {
        Self::new(tau, dt, vec![1.0, -1.0])
    }

    /// Position measurement: the grid coordinates are the pointer values.
    pub fn for_grid(tau: f64, dt: f64, grid: &GridSpec) -> Result<Self> {
        Self::new(tau, dt, grid.points())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Same measurement with a different step.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        Self::new(self.tau, dt, self.eigenvalues.clone())
    }

    /// Variance `tau/dt` of each Gaussian component of the readout distribution.
    pub fn readout_variance(&self) -> f64 {
        self.tau / self.dt
    }

    /// `(dt / 2 pi tau)^{1/4}`.
    pub fn prefactor(&self) -> f64 {
        (self.dt / (2.0 * PI * self.tau)).powf(0.25)
    }

    /// Warning text when `dt/tau` leaves the weak-measurement regime.
    pub fn weak_regime_warning(&self) -> Option<String> {
        let ratio = self.dt / self.tau;
        (ratio > Tolerances::DEFAULT.weak_regime_ratio).then(|| {
            format!("dt/tau = {ratio} exceeds {}; the measurement is not weak", Tolerances::DEFAULT.weak_regime_ratio)
        })
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: n });
        }
        Ok(())
    }
}

/// Instantaneous measurement record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub r: f64,
    pub t: f64,
}

impl Readout {
    pub fn new(r: f64, t: f64) -> Self {
        Self { r, t }
    }
}

/// Position grid plus the oscillator parameters of its ground state (hbar = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionGridConfig {
    pub x_min: f64,
    pub dx: f64,
    pub n_points: usize,
    pub mass: f64,
    pub omega: f64,
}

impl PositionGridConfig {
    /// Grid of `n_points` centered on `x0` spanning `x0 +- half_width`.
    pub fn centered(x0: f64, half_width: f64, n_points: usize, mass: f64, omega: f64) -> Self {
        let dx = 2.0 * half_width / (n_points.max(2) - 1) as f64;
        Self { x_min: x0 - half_width, dx, n_points, mass, omega }
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { x_min: self.x_min, dx: self.dx, n: self.n_points }
    }

    /// Ground-state position variance `hbar / 2 m omega`.
    pub fn ground_variance(&self) -> f64 {
        1.0 / (2.0 * self.mass * self.omega)
    }

    pub fn sigma(&self) -> f64 {
        self.ground_variance().sqrt()
    }

    /// Checks the size and span requirements for a Gaussian centered on `x0`.
    pub fn validate(&self, x0: f64) -> Result<()> {
        if self.n_points < 64 {
            return Err(Error::InvalidConfig(format!("grid needs at least 64 points, got {}", self.n_points)));
        }
        if !(self.dx > 0.0 && self.mass > 0.0 && self.omega > 0.0) {
            return Err(Error::InvalidConfig("dx, mass and omega must be positive".into()));
        }
        let reach = 6.0 * self.sigma();
        let spec = self.spec();
        if spec.x_min > x0 - reach || spec.x_max() < x0 + reach {
            return Err(Error::InvalidConfig(format!(
                "grid [{}, {}] does not span x0 +- 6 sigma = [{}, {}]",
                spec.x_min,
                spec.x_max(),
                x0 - reach,
                x0 + reach
            )));
        }
        Ok(())
    }

    /// Probability mass of the ground-state Gaussian centered on `x0` lying
    /// outside the grid cells.
    pub fn mass_outside(&self, x0: f64) -> f64 {
        use statrs::function::erf::erfc;
        let spec = self.spec();
        let s = self.sigma() * std::f64::consts::SQRT_2;
        let lo = spec.x_min - 0.5 * self.dx;
        let hi = spec.x_max() + 0.5 * self.dx;
        0.5 * erfc((x0 - lo) / s) + 0.5 * erfc((hi - x0) / s)
    }

    /// Ground state `(m omega / pi)^{1/4} exp(-m omega (x - x0)^2 / 2)` sampled
    /// on the grid with the `sqrt(dx)` weight, renormalized.
    pub fn ground_state(&self, x0: f64) -> Result<QuantumState> {
        let mw = self.mass * self.omega;
        let spec = self.spec();
        let amps = DVector::from_iterator(
            self.n_points,
            (0..self.n_points).map(|k| {
                let u = spec.x(k) - x0;
                C64::new((mw / PI).powf(0.25) * (-0.5 * mw * u * u).exp() * self.dx.sqrt(), 0.0)
            }),
        );
        crate::qstate::normalize(&QuantumState::with_basis(amps, BasisKind::PositionGrid(spec))?)
    }
}

fn log_amplitude_weights(r: f64, pointers: &[f64], scale: f64) -> Vec<f64> {
    pointers.iter().map(|&l| -scale * (r - l) * (r - l)).collect()
}

/// `M_dt` for readout `r`, diagonal in the pointer basis.
pub fn measurement_operator(r: &Readout, cfg: &GaussianMeasurementConfig) -> HermitianOperator {
    let pre = cfg.prefactor();
    let scale = cfg.dt / (4.0 * cfg.tau);
    let d: Vec<f64> = log_amplitude_weights(r.r, &cfg.eigenvalues, scale).iter().map(|w| pre * w.exp()).collect();
    HermitianOperator::diagonal(&d)
}

/// Draws `r` from `sum_i |a_i|^2 Normal(lambda_i, tau/dt)`: first an index by
/// its population, then Gaussian noise.
pub fn sample_readout<R: Rng + ?Sized>(
    state: &QuantumState,
    cfg: &GaussianMeasurementConfig,
    t: f64,
    rng: &mut R,
) -> Readout {
    let i = categorical(rng, &state.populations());
    let r = cfg.eigenvalues[i] + cfg.readout_variance().sqrt() * standard_normal(rng);
    Readout { r, t }
}

/// `ln P(r | psi)` where `P(r|psi) = <psi| M^dagger M |psi>` is the readout density.
pub fn readout_log_likelihood(state: &QuantumState, r: f64, cfg: &GaussianMeasurementConfig) -> Result<f64> {
    cfg.check_dim(state.dim())?;
    let var = cfg.readout_variance();
    let terms: Vec<f64> = state
        .populations()
        .iter()
        .zip(&cfg.eigenvalues)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, l)| p.ln() - 0.5 * (r - l) * (r - l) / var)
        .collect();
    Ok(log_sum_exp(&terms) - 0.5 * (2.0 * PI * var).ln())
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

// Multiplies amplitude i by exp(-scale (r - lambda_i)^2) and renormalizes,
// working in the log domain. `scale` may be negative (inverse step).
fn weighted_update(
    state: &QuantumState,
    r: f64,
    pointers: &[f64],
    scale: f64,
    log_prefactor: f64,
) -> Result<QuantumState> {
    if !r.is_finite() {
        return Err(Error::VanishingBranch { r });
    }
    let logw = log_amplitude_weights(r, pointers, scale);
    let amps = state.amplitudes();
    let support: Vec<usize> = (0..amps.len()).filter(|&i| amps[i].norm_sqr() > 0.0).collect();
    if support.is_empty() {
        return Err(Error::ZeroVector);
    }
    let terms: Vec<f64> = support.iter().map(|&i| amps[i].norm_sqr().ln() + 2.0 * logw[i]).collect();
    let log_norm = 0.5 * log_sum_exp(&terms) + log_prefactor;
    if log_norm < Tolerances::DEFAULT.zero_norm.ln() {
        return Err(Error::VanishingBranch { r });
    }
    let shift = support.iter().map(|&i| logw[i]).fold(f64::NEG_INFINITY, f64::max);
    let updated = DVector::from_iterator(amps.len(), (0..amps.len()).map(|i| amps[i] * (logw[i] - shift).exp()));
    crate::qstate::normalize(&state.with_amplitudes(updated)?)
}

/// `M_dt |psi> / |M_dt |psi>|`.
pub fn apply_measurement(state: &QuantumState, r: &Readout, cfg: &GaussianMeasurementConfig) -> Result<QuantumState> {
    cfg.check_dim(state.dim())?;
    weighted_update(state, r.r, &cfg.eigenvalues, cfg.dt / (4.0 * cfg.tau), cfg.prefactor().ln())
}

/// The normalized state that `apply_measurement` maps onto `state` for the
/// same readout, i.e. `M_dt^{-1} |psi>` renormalized. Used to obtain a
/// backward neighbour for central differences.
pub fn invert_measurement(state: &QuantumState, r: &Readout, cfg: &GaussianMeasurementConfig) -> Result<QuantumState> {
    cfg.check_dim(state.dim())?;
    weighted_update(state, r.r, &cfg.eigenvalues, -cfg.dt / (4.0 * cfg.tau), 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionMeasurement {
    pub operator: HermitianOperator,
    /// Set when the readout lies more than 12 ground-state widths from the grid
    /// center, where the Gaussian weights are dominated by the grid edge.
    pub truncation_warning: bool,
}

/// Position-measurement operator on a grid; the pointer values of `cfg` are ignored.
pub fn position_measurement_operator(
    r: &Readout,
    grid: &PositionGridConfig,
    cfg: &GaussianMeasurementConfig,
) -> PositionMeasurement {
    let pre = cfg.prefactor();
    let scale = cfg.dt / (4.0 * cfg.tau);
    let d: Vec<f64> = log_amplitude_weights(r.r, &grid.spec().points(), scale).iter().map(|w| pre * w.exp()).collect();
    let truncation_warning = (r.r - grid.spec().center()).abs() > 12.0 * grid.sigma();
    PositionMeasurement { operator: HermitianOperator::diagonal(&d), truncation_warning }
}

/// One step of a monitored system with its own Hamiltonian:
/// `rho' = U rho U^dagger / Tr[.]` with `U = exp(-i H_s dt) M_dt`.
pub fn monitored_qubit_step(
    rho: &HermitianOperator,
    h_s: &HermitianOperator,
    r: &Readout,
    cfg: &GaussianMeasurementConfig,
) -> Result<HermitianOperator> {
    cfg.check_dim(rho.dim())?;
    cfg.check_dim(h_s.dim())?;
    let logw = log_amplitude_weights(r.r, &cfg.eigenvalues, cfg.dt / (4.0 * cfg.tau));
    let shift = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = DMatrix::from_diagonal(&DVector::from_iterator(
        logw.len(),
        logw.iter().map(|w| C64::new((w - shift).exp(), 0.0)),
    ));
    let u = linalg::unitary(h_s, cfg.dt) * m;
    let out = &u * rho.matrix() * u.adjoint();
    let tr = out.trace().re;
    if !(tr > Tolerances::DEFAULT.zero_norm) {
        return Err(Error::VanishingBranch { r: r.r });
    }
    let out = HermitianOperator::symmetrized(out * C64::new(1.0 / tr, 0.0));
    let min = out.eigenvalues()[0];
    if min < -Tolerances::DEFAULT.non_positive {
        return Err(Error::NonPositive(min));
    }
    Ok(out)
}

/// Right-hand side `-i[H, rho] + (r/2tau){L, rho} - (r/tau)<L> rho` of the
/// first-order master equation for a monitored system with pointer observable
/// `L = diag(lambda)` (for a qubit, `L = sigma_z`).
pub fn master_equation_rhs(
    rho: &HermitianOperator,
    h_s: &HermitianOperator,
    r: f64,
    cfg: &GaussianMeasurementConfig,
) -> DMatrix<C64> {
    let l = HermitianOperator::diagonal(cfg.eigenvalues());
    let (rm, lm) = (rho.matrix(), l.matrix());
    let mean_l = (lm * rm).trace().re;
    let anti = lm * rm + rm * lm;
    linalg::von_neumann_rhs(h_s.matrix(), rm) + anti * C64::new(r / (2.0 * cfg.tau), 0.0)
        - rm * C64::new(r / cfg.tau * mean_l, 0.0)
}
