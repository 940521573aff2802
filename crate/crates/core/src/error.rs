use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Numeric and domain errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot normalize a zero vector")]
    ZeroVector,
    #[error("state is not normalized (|psi|^2 - 1 = {0:e})")]
    NotNormalized(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("expectation value has imaginary part {0:e}")]
    NonHermitianLeak(f64),
    #[error("invalid measurement configuration: {0}")]
    InvalidConfig(String),
    #[error("readout {r} has vanishing likelihood for the current state")]
    VanishingBranch { r: f64 },
    #[error("density matrix lost positivity (eigenvalue {0:e})")]
    NonPositive(f64),
    #[error("trajectory sample times must be strictly increasing (duplicate at index {0})")]
    DuplicateTime(usize),
    #[error("trajectory needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("sample index {index} out of range for series of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("state derivative does not conserve the norm (Re<psi|dpsi> = {0:e})")]
    InconsistentInput(f64),
    #[error("position grid too narrow: Gaussian mass outside the grid is {0:e}")]
    GridTooNarrow(f64),
    #[error("operator does not annihilate the state (|T psi| = {0:e})")]
    NotInKernel(f64),
    #[error("degenerate most-probable-path endpoints (z_I z_F = 1 or |z_F| >= 1)")]
    DegenerateEndpoint,
    #[error("closed-form effective Hamiltonian only exists for the (1, 0, 0) initial Bloch vector")]
    OutsideWorkedCase,
    #[error("every ensemble member has vanishing likelihood for readout {r}")]
    AllWeightsVanish { r: f64 },
}

impl Error {
    /// True for failures that indicate a broken numeric invariant rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::ZeroVector
                | Error::NotNormalized(_)
                | Error::NotHermitian(_)
                | Error::NonHermitianLeak(_)
                | Error::VanishingBranch { .. }
                | Error::NonPositive(_)
                | Error::InconsistentInput(_)
                | Error::NotInKernel(_)
                | Error::AllWeightsVanish { .. }
        )
    }
}
