use nalgebra::DMatrix;

use super::HermitianOperator;
use crate::{Error, Result, C64};

/// The `n^2 - 1` generalized Gell-Mann matrices of SU(n).
///
/// Ordering: every symmetric `|j><k| + |k><j|` for `j < k` in lexicographic
/// order, then every antisymmetric `-i|j><k| + i|k><j|` in the same order,
/// then the diagonal generators `Lambda^1 .. Lambda^{n-1}`. All generators are
/// traceless with `Tr(Lambda_i Lambda_j) = 2 delta_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorBasis {
    n: usize,
    generators: Vec<HermitianOperator>,
}

impl GeneratorBasis {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[HermitianOperator] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

/// Coefficients `op = lambda_0 I + sum_i lambda_i Lambda_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochVector {
    pub identity_coefficient: f64,
    pub components: Vec<f64>,
}

impl BlochVector {
    /// Euclidean dot product of the generator components (identity part excluded).
    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.components.iter().zip(&other.components).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Rebuilds the operator from its coefficients.
    pub fn reconstruct(&self, basis: &GeneratorBasis) -> Result<HermitianOperator> {
        if self.components.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: self.components.len() });
        }
        let n = basis.dim();
        let mut m = DMatrix::<C64>::identity(n, n) * C64::new(self.identity_coefficient, 0.0);
        for (coef, g) in self.components.iter().zip(basis.generators()) {
            m += g.matrix() * C64::new(*coef, 0.0);
        }
        Ok(HermitianOperator::symmetrized(m))
    }
}

pub fn gellmann_basis(n: usize) -> Result<GeneratorBasis> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let zero = C64::new(0.0, 0.0);
    let mut generators = Vec::with_capacity(n * n - 1);
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))).collect();
    for &(j, k) in &pairs {
        let mut m = DMatrix::from_element(n, n, zero);
        m[(j, k)] = C64::new(1.0, 0.0);
        m[(k, j)] = C64::new(1.0, 0.0);
        generators.push(HermitianOperator::symmetrized(m));
    }
    for &(j, k) in &pairs {
        let mut m = DMatrix::from_element(n, n, zero);
        m[(j, k)] = C64::new(0.0, -1.0);
        m[(k, j)] = C64::new(0.0, 1.0);
        generators.push(HermitianOperator::symmetrized(m));
    }
    for l in 1..n {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut diag = vec![0.0; n];
        diag[..l].iter_mut().for_each(|d| *d = norm);
        diag[l] = -(l as f64) * norm;
        generators.push(HermitianOperator::diagonal(&diag));
    }
    Ok(GeneratorBasis { n, generators })
}

/// `lambda_0 = Tr(op)/n`, `lambda_i = Tr(op Lambda_i)/2`.
pub fn bloch_decompose(op: &HermitianOperator, basis: &GeneratorBasis) -> Result<BlochVector> {
    if op.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: op.dim() });
    }
    let identity_coefficient = op.trace() / basis.dim() as f64;
    let components = basis.generators().iter().map(|g| 0.5 * trace_product(op.matrix(), g.matrix())).collect();
    Ok(BlochVector { identity_coefficient, components })
}

// Re Tr(AB) without forming the product.
fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{density_from_pure, QuantumState};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn qubit_basis_is_pauli() {
        let b = gellmann_basis(2).unwrap();
        assert_eq!(b.generators()[0], HermitianOperator::pauli_x());
        assert_eq!(b.generators()[1], HermitianOperator::pauli_y());
        assert_eq!(b.generators()[2], HermitianOperator::pauli_z());
    }

    #[test]
    fn qutrit_last_diagonal() {
        let b = gellmann_basis(3).unwrap();
        assert_eq!(b.len(), 8);
        let s = 1.0 / 3f64.sqrt();
        let last = b.generators()[7].matrix();
        for (i, e) in [s, s, -2.0 * s].iter().enumerate() {
            assert_abs_diff_eq!(last[(i, i)].re, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_small_dimension() {
        assert_eq!(gellmann_basis(1), Err(Error::DimensionTooSmall(1)));
    }

    #[test]
    fn generators_orthonormal_and_traceless() {
        for n in 2..=6 {
            let b = gellmann_basis(n).unwrap();
            for (i, gi) in b.generators().iter().enumerate() {
                assert_abs_diff_eq!(gi.trace(), 0.0, epsilon = 1e-12);
                for (j, gj) in b.generators().iter().enumerate() {
                    let expected = if i == j { 2.0 } else { 0.0 };
                    assert_abs_diff_eq!(trace_product(gi.matrix(), gj.matrix()), expected, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn decompose_examples() {
        let b = gellmann_basis(2).unwrap();
        let id = bloch_decompose(&HermitianOperator::identity(2), &b).unwrap();
        assert_eq!(id.identity_coefficient, 1.0);
        assert_eq!(id.components, vec![0.0, 0.0, 0.0]);

        let z = bloch_decompose(&HermitianOperator::pauli_z(), &b).unwrap();
        assert_eq!(z.identity_coefficient, 0.0);
        assert_eq!(z.components, vec![0.0, 0.0, 1.0]);

        let rho = density_from_pure(&QuantumState::basis_state(2, 0).unwrap());
        let v = bloch_decompose(&rho, &b).unwrap();
        assert_abs_diff_eq!(v.identity_coefficient, 0.5);
        assert_eq!(v.components, vec![0.0, 0.0, 0.5]);
    }

    #[test]
    fn decompose_dimension_mismatch() {
        let b = gellmann_basis(3).unwrap();
        assert!(bloch_decompose(&HermitianOperator::pauli_z(), &b).is_err());
    }

    fn hermitian_strategy() -> impl Strategy<Value = HermitianOperator> {
        (2usize..7).prop_flat_map(|n| {
            proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), n * n).prop_map(move |v| {
                let m = DMatrix::from_iterator(n, n, v.into_iter().map(|(re, im)| C64::new(re, im)));
                HermitianOperator::symmetrized(m)
            })
        })
    }

    proptest! {
        #[test]
        fn decompose_round_trip(op in hermitian_strategy()) {
            let b = gellmann_basis(op.dim()).unwrap();
            let back = bloch_decompose(&op, &b).unwrap().reconstruct(&b).unwrap();
            prop_assert!(back.max_abs_diff(&op) < 1e-10);
        }
    }
}
