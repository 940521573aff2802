//! Small dense propagators: exact exponentials of Hermitian generators and a
//! fixed-step RK4 for the von Neumann equation.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::qstate::HermitianOperator;
use crate::C64;

/// `exp(-i H t)` via the eigendecomposition of `H`.
pub fn unitary(h: &HermitianOperator, t: f64) -> DMatrix<C64> {
    let eig = SymmetricEigen::new(h.matrix().clone());
    let phases =
        DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&e| C64::from_polar(1.0, -e * t)));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&phases) * v.adjoint()
}

/// `exp(-i H t) v`.
pub fn propagate(h: &HermitianOperator, v: &DVector<C64>, t: f64) -> DVector<C64> {
    unitary(h, t) * v
}

/// `-i [H, rho]`.
pub fn von_neumann_rhs(h: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    (h * rho - rho * h) * C64::new(0.0, -1.0)
}

/// One classical RK4 step of `d rho/dt = -i [H(t), rho]`.
pub fn rk4_step<F>(h_of_t: &F, rho: &DMatrix<C64>, t: f64, dt: f64) -> DMatrix<C64>
where
    F: Fn(f64) -> DMatrix<C64>,
{
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let h0 = h_of_t(t);
    let hm = h_of_t(t + 0.5 * dt);
    let h1 = h_of_t(t + dt);
    let k1 = von_neumann_rhs(&h0, rho);
    let k2 = von_neumann_rhs(&hm, &(rho + &k1 * half));
    let k3 = von_neumann_rhs(&hm, &(rho + &k2 * half));
    let k4 = von_neumann_rhs(&h1, &(rho + &k3 * full));
    rho + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0)
}

/// Trace distance `1/2 Tr|A - B|` between two Hermitian matrices.
pub fn trace_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let d = a - b;
    let d = (&d + d.adjoint()) * C64::new(0.5, 0.0);
    0.5 * SymmetricEigen::new(d).eigenvalues.iter().map(|e| e.abs()).sum::<f64>()
}
