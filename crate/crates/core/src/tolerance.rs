//! Numeric thresholds shared by every module.

/// All thresholds in one place. [`Tolerances::DEFAULT`] holds the values the
/// library uses; the struct exists so tests and callers can refer to them by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed deviation of `sum |a_i|^2` from 1 after normalization.
    pub norm: f64,
    /// Allowed deviation of `sum |a_i|^2` from 1 for states read from a record.
    pub stored_norm: f64,
    /// Allowed `|A - A^dagger|` entry deviation, relative to `max(1, max |A_ij|)`.
    pub hermitian: f64,
    /// Bloch decomposition round-trip error.
    pub bloch_roundtrip: f64,
    /// Largest imaginary part tolerated in an expectation value.
    pub expectation_imag: f64,
    /// Norms below this are treated as zero.
    pub zero_norm: f64,
    /// Most negative eigenvalue tolerated in a density matrix.
    pub non_positive: f64,
    /// Largest `Re <psi|dpsi>` accepted by the reconstruction.
    pub inconsistent_input: f64,
    /// Largest `|T psi|` for a kernel-space element passed to `equivalent_hamiltonian`.
    pub not_in_kernel: f64,
    /// Singular values below `kernel_rel * sigma_max` span the kernel.
    pub kernel_rel: f64,
    /// Gaussian probability mass allowed outside a position grid.
    pub grid_mass: f64,
    /// `|z_I z_F - 1|` below this is a degenerate most-probable-path.
    pub degenerate_endpoint: f64,
    /// Population above which a trajectory counts as collapsed.
    pub collapse_threshold: f64,
    /// `dt / tau` above this triggers the weak-measurement warning.
    pub weak_regime_ratio: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        norm: 1e-12,
        stored_norm: 1e-9,
        hermitian: 1e-12,
        bloch_roundtrip: 1e-10,
        expectation_imag: 1e-10,
        zero_norm: 1e-300,
        non_positive: 1e-10,
        inconsistent_input: 1e-8,
        not_in_kernel: 1e-8,
        kernel_rel: 1e-10,
        grid_mass: 1e-10,
        degenerate_endpoint: 1e-12,
        collapse_threshold: 1.0 - 1e-6,
        weak_regime_ratio: 0.1,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
