//! All Hamiltonians that generate the same instantaneous motion differ by a
//! Hermitian operator annihilating the state. This module computes that
//! kernel space numerically.

use nalgebra::{DMatrix, DVector, SVD};

use crate::qstate::{bloch_decompose, gellmann_basis, GeneratorBasis, HermitianOperator, QuantumState};
use crate::{Error, Result, Tolerances};

/// Real-linear basis of `V = { T Hermitian : T psi = 0 }`.
#[derive(Debug, Clone)]
pub struct KernelSpace {
    pub basis: Vec<HermitianOperator>,
    /// Observed dimension of `V`.
    pub dimension: usize,
    /// The parameter-count figure `n^2 - n`, reported for comparison only.
    pub claimed_dimension: usize,
    // Orthonormal coefficient vectors (identity, generators) of the basis.
    coefficients: Vec<DVector<f64>>,
    generators: GeneratorBasis,
}

impl KernelSpace {
    /// Distance of `t`'s coefficient vector from the span of the basis,
    /// relative to its own norm.
    pub fn span_residual(&self, t: &HermitianOperator) -> Result<f64> {
        let c = coefficient_vector(t, &self.generators)?;
        let norm = c.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let mut rem = c;
        for v in &self.coefficients {
            let proj = rem.dot(v);
            rem -= v * proj;
        }
        Ok(rem.norm() / norm)
    }
}

// (lambda_0, lambda_1, ...) with the identity column scaled so that the
// parameterization is orthonormal under Tr(AB)/2.
fn coefficient_vector(t: &HermitianOperator, basis: &GeneratorBasis) -> Result<DVector<f64>> {
    let bv = bloch_decompose(t, basis)?;
    let id_scale = (basis.dim() as f64 / 2.0).sqrt();
    Ok(DVector::from_iterator(
        basis.len() + 1,
        std::iter::once(bv.identity_coefficient * id_scale).chain(bv.components.iter().copied()),
    ))
}

/// Solves `T psi = 0` for Hermitian `T = t_0 I' + sum_i t_i Lambda_i` as a
/// real-linear system in the `n^2` real coefficients, keeping right singular
/// vectors whose singular value is below `kernel_rel * sigma_max`.
pub fn kernel_space_basis(state: &QuantumState) -> Result<KernelSpace> {
    let n = state.dim();
    let generators = gellmann_basis(n)?;
    let psi = state.amplitudes();
    let id_scale = (2.0 / n as f64).sqrt();
    let mut columns: Vec<HermitianOperator> = Vec::with_capacity(n * n);
    columns.push(HermitianOperator::identity(n).scale(id_scale));
    columns.extend(generators.generators().iter().cloned());

    let p = n * n;
    // Zero-padded to square so the SVD returns a full set of right singular vectors.
    let mut a = DMatrix::<f64>::zeros(p, p);
    for (col, op) in columns.iter().enumerate() {
        let v = op.apply(psi);
        for i in 0..n {
            a[(i, col)] = v[i].re;
            a[(n + i, col)] = v[i].im;
        }
    }
    let svd = SVD::new(a, false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let threshold = Tolerances::DEFAULT.kernel_rel * sigma_max.max(f64::MIN_POSITIVE);

    let mut basis = Vec::new();
    let mut coefficients = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > threshold {
            continue;
        }
        let row: DVector<f64> = v_t.row(k).transpose();
        let mut m = DMatrix::zeros(n, n);
        for (coef, op) in row.iter().zip(&columns) {
            m += op.matrix() * crate::C64::new(*coef, 0.0);
        }
        basis.push(HermitianOperator::symmetrized(m));
        coefficients.push(row);
    }
    Ok(KernelSpace { dimension: basis.len(), claimed_dimension: n * n - n, basis, coefficients, generators })
}

/// `H' = H + T` for `T` in the kernel space of `state`.
pub fn equivalent_hamiltonian(
    state: &QuantumState,
    h: &HermitianOperator,
    t: &HermitianOperator,
) -> Result<HermitianOperator> {
    if h.dim() != state.dim() || t.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: h.dim().max(t.dim()) });
    }
    let leak = t.apply_state(state).norm();
    if leak >= Tolerances::DEFAULT.not_in_kernel {
        return Err(Error::NotInKernel(leak));
    }
    Ok(h + t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn basis_state_kernel_is_projector_on_other_level() {
        let k = kernel_space_basis(&QuantumState::basis_state(2, 0).unwrap()).unwrap();
        assert_eq!(k.dimension, 1);
        assert_eq!(k.claimed_dimension, 2);
        let t = k.basis[0].matrix();
        assert!(t[(0, 0)].norm() < 1e-14 && t[(0, 1)].norm() < 1e-14);
        assert!(t[(1, 1)].re.abs() > 0.1);
    }

    #[test]
    fn two_level_alternative_hamiltonian() {
        // Both -sigma_z and the time-dependent alternative drive
        // psi(t) = (e^{it}/sqrt3, sqrt(2/3) e^{-it}).
        let r2 = 2f64.sqrt();
        for &t in &[0.0, 0.4, 1.3, 2.9] {
            let psi = QuantumState::from_amplitudes(vec![
                C64::from_polar(1.0 / 3f64.sqrt(), t),
                C64::from_polar((2.0f64 / 3.0).sqrt(), -t),
            ])
            .unwrap();
            let alt = &(&(&HermitianOperator::identity(2).scale(1.0 / 3.0)
                + &HermitianOperator::pauli_x().scale(-2.0 / 9.0 * r2 * (2.0 * t).cos()))
                + &HermitianOperator::pauli_y().scale(2.0 / 9.0 * r2 * (2.0 * t).sin()))
                + &HermitianOperator::pauli_z().scale(-8.0 / 9.0);
            let h = -&HermitianOperator::pauli_z();
            let tk = &alt - &h;
            let k = kernel_space_basis(&psi).unwrap();
            assert!(k.span_residual(&tk).unwrap() < 1e-10);
            let h2 = equivalent_hamiltonian(&psi, &h, &tk).unwrap();
            assert!(h2.max_abs_diff(&alt) < 1e-15);
            assert_abs_diff_eq!(h2.variance(&psi), h.variance(&psi), epsilon = 1e-12);
            assert_abs_diff_eq!(h.variance(&psi), 8.0 / 9.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_shift_is_identity() {
        let psi = QuantumState::from_real(&[0.6, 0.8]).unwrap();
        let h = HermitianOperator::pauli_x();
        assert_eq!(equivalent_hamiltonian(&psi, &h, &HermitianOperator::zeros(2)).unwrap(), h);
    }

    #[test]
    fn non_kernel_shift_rejected() {
        let psi = QuantumState::from_real(&[0.6, 0.8]).unwrap();
        let h = HermitianOperator::pauli_x();
        assert!(matches!(equivalent_hamiltonian(&psi, &h, &HermitianOperator::pauli_z()), Err(Error::NotInKernel(_))));
    }

    fn state_strategy() -> impl Strategy<Value = QuantumState> {
        (2usize..=6).prop_flat_map(|n| {
            proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_filter_map("nonzero", |v| {
                QuantumState::normalized(v.into_iter().map(|(re, im)| C64::new(re, im)).collect()).ok()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn kernel_elements_annihilate_state(s in state_strategy()) {
            let k = kernel_space_basis(&s).unwrap();
            let n = s.dim();
            prop_assert_eq!(k.dimension, (n - 1) * (n - 1));
            for t in &k.basis {
                prop_assert!(t.apply_state(&s).norm() < 1e-10);
            }
        }
    }
}
