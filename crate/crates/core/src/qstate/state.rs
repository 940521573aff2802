use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Tolerances, C64};

/// Uniform position grid `x_k = x_min + k dx`, `k = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub dx: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn x(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n.saturating_sub(1))
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.x_min + self.x_max())
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.x(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BasisKind {
    /// Discrete levels `|0>, |1>, ...`.
    Level,
    /// Point values on a position grid; amplitudes carry the `sqrt(dx)` weight
    /// so that `sum |a_k|^2 = 1`.
    PositionGrid(GridSpec),
}

/// Complex amplitude vector over a finite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amps: DVector<C64>,
    basis: BasisKind,
}

impl QuantumState {
    /// Wraps raw amplitudes without normalizing them.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        Self::with_basis(DVector::from_vec(amps), BasisKind::Level)
    }

    pub fn with_basis(amps: DVector<C64>, basis: BasisKind) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::DimensionTooSmall(amps.len()));
        }
        if let BasisKind::PositionGrid(grid) = basis {
            if grid.n != amps.len() {
                return Err(Error::DimensionMismatch { expected: grid.n, got: amps.len() });
            }
        }
        Ok(Self { amps, basis })
    }

    /// Builds a normalized level state from complex amplitudes.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        normalize(&Self::from_amplitudes(amps)?)
    }

    /// Builds a normalized level state from real amplitudes.
    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::normalized(amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    /// Computational basis state `|index>` of an `n`-level system.
    pub fn basis_state(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, len: n });
        }
        let mut amps = vec![C64::new(0.0, 0.0); n];
        amps[index] = C64::new(1.0, 0.0);
        Self::from_amplitudes(amps)
    }

    /// Replaces the amplitudes, keeping the basis descriptor.
    pub fn with_amplitudes(&self, amps: DVector<C64>) -> Result<Self> {
        Self::with_basis(amps, self.basis)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &QuantumState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &QuantumState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Index and value of the largest population.
    pub fn max_population(&self) -> (usize, f64) {
        self.amps.iter().map(|a| a.norm_sqr()).enumerate().fold((0, f64::NEG_INFINITY), |best, (i, p)| {
            if p > best.1 {
                (i, p)
            } else {
                best
            }
        })
    }

    pub fn is_normalized(&self) -> bool {
        (self.amps.norm_squared() - 1.0).abs() <= Tolerances::DEFAULT.norm
    }
}

/// Rescales a state to unit norm.
pub fn normalize(state: &QuantumState) -> Result<QuantumState> {
    let norm = state.norm();
    if !(norm >= Tolerances::DEFAULT.zero_norm) || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(QuantumState { amps: state.amps.unscale(norm), basis: state.basis })
}
