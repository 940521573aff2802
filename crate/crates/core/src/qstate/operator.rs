use std::ops::{Add, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::QuantumState;
use crate::{Error, Result, Tolerances, C64};

/// Dense complex Hermitian matrix (energy units, hbar = 1).
///
/// Construction checks Hermiticity and then stores the exactly symmetrized
/// matrix `(A + A^dagger) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: DMatrix<C64>,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl HermitianOperator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let scale = m.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
        let dev = (&m - m.adjoint()).iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
        if !(dev <= Tolerances::DEFAULT.hermitian * scale) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without checking. Callers must know the input is Hermitian
    /// up to rounding.
    pub(crate) fn symmetrized(m: DMatrix<C64>) -> Self {
        let adj = m.adjoint();
        Self { m: (m + adj) * c(0.5, 0.0) }
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let d = DVector::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0)));
        Self { m: DMatrix::from_diagonal(&d) }
    }

    pub fn pauli_x() -> Self {
        Self { m: DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]) }
    }

    pub fn pauli_y() -> Self {
        Self { m: DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]) }
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    /// `|u><u|` for an arbitrary vector `u`.
    pub fn projector(u: &DVector<C64>) -> Self {
        Self::symmetrized(u * u.adjoint())
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn scale(&self, k: f64) -> Self {
        Self { m: &self.m * c(k, 0.0) }
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.m * v
    }

    pub fn apply_state(&self, state: &QuantumState) -> DVector<C64> {
        &self.m * state.amplitudes()
    }

    /// Largest absolute entry deviation from `other`.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        (&self.m - &other.m).iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.m.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Spectral norm, `max |eigenvalue|`.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues().iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }

    /// Variance `<H^2> - <H>^2` in a pure state.
    pub fn variance(&self, state: &QuantumState) -> f64 {
        let hv = self.apply_state(state);
        let mean = state.amplitudes().dotc(&hv).re;
        (hv.norm_squared() - mean * mean).max(0.0)
    }
}

impl Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { m: &self.m + &rhs.m }
    }
}

impl Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: &HermitianOperator) -> HermitianOperator {
        HermitianOperator { m: &self.m - &rhs.m }
    }
}

impl Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        HermitianOperator { m: -&self.m }
    }
}

/// `rho = |psi><psi|`.
pub fn density_from_pure(state: &QuantumState) -> HermitianOperator {
    HermitianOperator::projector(state.amplitudes())
}

/// `<psi|op|psi>`, rejecting results with a non-negligible imaginary part.
pub fn expectation(op: &HermitianOperator, state: &QuantumState) -> Result<f64> {
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: state.dim() });
    }
    let z = state.amplitudes().dotc(&op.apply_state(state));
    let scale = op.max_abs().max(1.0);
    if z.im.abs() >= Tolerances::DEFAULT.expectation_imag * scale {
        return Err(Error::NonHermitianLeak(z.im));
    }
    Ok(z.re)
}
