use thiserror::Error;

/// Every failure mode of the library.
///
/// Payloads are carried as `f64` regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    NonHermitianInput { asymmetry: f64, tolerance: f64 },

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is singular or too close to singular")]
    SingularMatrix,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinates leave the open Weyl chamber at index {index} (gap {gap:e})")]
    ChamberViolation { index: usize, gap: f64 },

    #[error("orbit vector has |v|^2 = {norm_sq}, expected {expected}")]
    OrbitViolation { norm_sq: f64, expected: f64 },

    #[error("invalid coupling: {0}")]
    InvalidCoupling(String),

    #[error("Hamiltonian index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("point is off the constraint surface: residual {residual:e} exceeds {tolerance:e}")]
    ConstraintViolated { residual: f64, tolerance: f64 },

    #[error("eigenvalues collide at index {index} (gap {gap:e})")]
    CollidingEigenvalues { index: usize, gap: f64 },

    #[error("phase fixing is degenerate at component {index} (modulus {modulus:e})")]
    PhaseDegeneracy { index: usize, modulus: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures caused by numerical degeneracy of otherwise valid
    /// input (colliding spectra, singular factors, phase degeneracy).
    pub fn is_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::CollidingEigenvalues { .. }
                | Error::PhaseDegeneracy { .. }
                | Error::SingularMatrix
                | Error::NotPositiveDefinite { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
