//! Closed-form measuring Hamiltonians and energy spreads for Gaussian
//! measurements (hbar = 1).

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::measurement::PositionGridConfig;
use crate::qstate::{BasisKind, HermitianOperator, QuantumState};
use crate::{Error, Result, Tolerances, C64};

/// `eta_ij = (lambda_i - lambda_j)(2r - lambda_i - lambda_j)`.
fn eta(li: f64, lj: f64, r: f64) -> f64 {
    (li - lj) * (2.0 * r - li - lj)
}

/// Qubit `sigma_z` measurement: `H = [[0, i a b* r/tau], [-i a* b r/tau, 0]]`.
pub fn closed_form_qubit_h(a: C64, b: C64, r: f64, tau: f64) -> HermitianOperator {
    let off = C64::new(0.0, 1.0) * a * b.conj() * (r / tau);
    let zero = C64::new(0.0, 0.0);
    HermitianOperator::symmetrized(DMatrix::from_row_slice(2, 2, &[zero, off, off.conj(), zero]))
}

// s_j = sum_i |a_i|^2 eta_ij
fn weighted_eta(pops: &[f64], lambdas: &[f64], r: f64) -> Vec<f64> {
    (0..lambdas.len()).map(|j| pops.iter().zip(lambdas).map(|(p, &li)| p * eta(li, lambdas[j], r)).sum()).collect()
}

fn check_lengths(state: &QuantumState, lambdas: &[f64]) -> Result<()> {
    if state.dim() != lambdas.len() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: lambdas.len() });
    }
    Ok(())
}

/// `n`-level measurement:
/// `H_ij = i (a_i a_j* / 4tau) sum_k |a_k|^2 (eta_ik + eta_kj)`.
///
/// Since `eta` is antisymmetric the sum equals `s_j - s_i` with
/// `s_j = sum_k |a_k|^2 eta_kj`, which is how it is evaluated.
pub fn closed_form_nlevel_h(state: &QuantumState, lambdas: &[f64], r: f64, tau: f64) -> Result<HermitianOperator> {
    check_lengths(state, lambdas)?;
    let a = state.amplitudes();
    let s = weighted_eta(&state.populations(), lambdas, r);
    let n = lambdas.len();
    let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        for j in i + 1..n {
            let v = C64::new(0.0, 1.0) * a[i] * a[j].conj() * ((s[j] - s[i]) / (4.0 * tau));
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    Ok(HermitianOperator::symmetrized(m))
}

/// `(Delta H)^2 = sum_j (|a_j|^2 / 16 tau^2) (sum_i |a_i|^2 eta_ij)^2`.
pub fn energy_variance_nlevel(state: &QuantumState, lambdas: &[f64], r: f64, tau: f64) -> Result<f64> {
    check_lengths(state, lambdas)?;
    let pops = state.populations();
    let s = weighted_eta(&pops, lambdas, r);
    Ok(pops.iter().zip(&s).map(|(p, sj)| p * sj * sj).sum::<f64>() / (16.0 * tau * tau))
}

/// Measuring Hamiltonian of a weak position measurement on the oscillator
/// ground state centered at `x0`, as a grid kernel carrying the `dx` measure:
/// `H_kl = i (eta_kl / 4tau) sqrt(m w / pi) exp(-m w ((x_k - x0)^2 + (x_l - x0)^2) / 2) dx`.
pub fn closed_form_position_h(
    grid_state: &QuantumState,
    x0: f64,
    r: f64,
    tau: f64,
    grid: &PositionGridConfig,
) -> Result<HermitianOperator> {
    if grid_state.dim() != grid.n_points {
        return Err(Error::DimensionMismatch { expected: grid.n_points, got: grid_state.dim() });
    }
    if let BasisKind::PositionGrid(spec) = grid_state.basis() {
        if spec != grid.spec() {
            return Err(Error::InvalidConfig("state grid differs from the supplied grid".into()));
        }
    }
    let outside = grid.mass_outside(x0);
    if outside > Tolerances::DEFAULT.grid_mass {
        return Err(Error::GridTooNarrow(outside));
    }
    let mw = grid.mass * grid.omega;
    let norm = (mw / PI).sqrt() * grid.dx / (4.0 * tau);
    let xs = grid.spec().points();
    let n = xs.len();
    let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for k in 0..n {
        let uk = xs[k] - x0;
        for l in k + 1..n {
            let ul = xs[l] - x0;
            let v = C64::new(0.0, norm * eta(xs[k], xs[l], r) * (-0.5 * mw * (uk * uk + ul * ul)).exp());
            m[(k, l)] = v;
            m[(l, k)] = v.conj();
        }
    }
    Ok(HermitianOperator::symmetrized(m))
}

/// `Delta H = sqrt(2 (r - x)^2 dX^2 + dX^4) / (2 sqrt2 tau)` for a Gaussian of
/// width `dX` centered at `x` (hbar = 1).
pub fn energy_uncertainty_position(dx: f64, r: f64, x_mean: f64, tau: f64) -> f64 {
    let v = dx * dx;
    (2.0 * (r - x_mean).powi(2) * v + v * v).sqrt() / (2.0 * 2f64.sqrt() * tau)
}
