use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e}, tolerance {tolerance:e})")]
    NotHermitian { asymmetry: f64, tolerance: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("keep set for partial trace is empty")]
    EmptyKeepSet,

    #[error("function undefined on eigenvalue {0:e}")]
    DomainError(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("exponent overflow: {0}")]
    Overflow(String),

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("acceleration must be positive, got {0}")]
    NonPositiveAcceleration(f64),

    #[error("invalid mixing weights: {0}")]
    InvalidWeights(String),

    #[error("noise fraction must lie in [0, 1], got {0}")]
    InvalidNoise(f64),

    #[error("expected a tripartite state, got {0} subsystems")]
    WrongArity(usize),

    #[error("search exhausted after {evaluations} family evaluations (best negativity reached {best_negativity:.6})")]
    SearchExhausted {
        evaluations: usize,
        best_negativity: f64,
        frontier: Box<crate::states::SearchFrontier>,
    },

    #[error("no separable decomposition across subsystem {party}: trace-norm error {error:e} after {atoms} product terms")]
    DecompositionFailed { party: usize, error: f64, atoms: usize },

    #[error("state vector is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("bad cut: {0}")]
    BadCut(String),

    #[error("bad region: {0}")]
    BadRegion(String),

    #[error("transfer condition violated: {0}")]
    ConditionViolated(String),

    #[error("negative entropy {value:e} for {name}")]
    NegativeEntropy { name: &'static str, value: f64 },

    #[error("bad star partition: {0}")]
    BadPartition(String),

    #[error("space-time dimension must be at least 3, got {0}")]
    BadDimension(i64),

    #[error("invalid regulator scheme: {0}")]
    InvalidScheme(String),

    #[error("UV cutoff delta must be non-zero")]
    ZeroCutoff,

    #[error("regulator hierarchy violated: {0}")]
    RegulatorViolation(String),

    #[error("entropy delta must be positive, got {0}")]
    NonPositiveDelta(f64),

    #[error("c0_tilde = {c0_tilde} is inconsistent with c0 = {c0} (need c0_tilde == 4 c0)")]
    SchemeInconsistent { c0_tilde: f64, c0: f64 },

    #[error("Newton constant must be positive, got {0}")]
    NonPositiveG(f64),

    #[error("bad grid: {0}")]
    BadGrid(String),

    #[error("integrand has not decayed at the truncation boundary (ratio {ratio:e} > {tolerance:e})")]
    TruncationInvalid { ratio: f64, tolerance: f64 },

    #[error("Killing orbit accelerator must be positive, got {0}")]
    NonPositiveKappa(f64),

    #[error("invalid config at `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("{context}: {source}")]
    Scenario {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_scenario(self, context: impl Into<String>) -> Self {
        Error::Scenario {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
