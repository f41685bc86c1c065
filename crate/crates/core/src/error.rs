use thiserror::Error;

pub type Result<T> = std::result::Result<T, MqcError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MqcError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the dense cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    #[error("matrix is not Hermitian: |A - A^dag|_F / |A|_F = {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error("defective spectrum at eigenvalue indices {indices:?}")]
    Defective { indices: Vec<usize> },

    #[error("exceptional point: left/right overlap {overlap:e} is numerically zero")]
    ExceptionalPoint { overlap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported parameter branch: {0}")]
    Unsupported(String),

    #[error("sum rule violated: sum of intensities {sum} vs Tr(rho^dag rho) = {expected}")]
    SumRuleViolation { sum: f64, expected: f64 },

    #[error("no interior peak in the swept signal")]
    NoPeak,

    #[error("reference spectrum is not integer spaced (label {label})")]
    NonIntegerSpectrum { label: f64 },

    #[error("aliasing: largest coherence order {m_max} needs at least {needed} phases, got {samples}")]
    Aliasing { m_max: i64, needed: usize, samples: usize },

    #[error("all {count} realizations failed at W = {strength}")]
    EnsembleFailed { strength: f64, count: usize },
}

impl MqcError {
    /// True for failures that come from spectral coalescence rather than bad input.
    pub fn is_exceptional(&self) -> bool {
        matches!(self, MqcError::ExceptionalPoint { .. } | MqcError::Defective { .. })
    }
}
