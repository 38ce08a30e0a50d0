use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix shape must be non-empty")]
    EmptyShape,
    #[error("{rows}x{cols} matrix needs {} entries, got {len}", rows * cols)]
    EntryCount { rows: usize, cols: usize, len: usize },
    #[error("rows have different lengths")]
    RaggedRows,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("expected a square matrix, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("matrix is singular")]
    Singular,
    #[error("Lyapunov operator is singular (eigenvalue pair summing to zero)")]
    SingularSylvester,
    #[error("no stabilizing initial iterate found; the attenuation level may be infeasible")]
    NoStabilizingInit,
    #[error("Newton iteration failed ({reason}, residual {residual:e}); the attenuation level may be infeasible")]
    NewtonDiverged { residual: f64, reason: &'static str },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid noise distribution: {0}")]
    InvalidDistribution(String),
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("noise component {index} = {value} lies outside the open interval (-{bound}, {bound})")]
    OutOfDomain { index: usize, value: f64, bound: f64 },
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0} must be diagonal in bounded mode")]
    NotDiagonal(&'static str),
    #[error("{0} must be symmetric positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("attenuation level must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("measurement weight R is singular")]
    SingularR,
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("input length mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("network does not have a scalar output")]
    NotScalarOutput,
    #[error("parameter/gradient shape mismatch: {params} vs {grads}")]
    ShapeMismatch { params: usize, grads: usize },
    #[error("invalid network: {0}")]
    InvalidNet(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TpiError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },
    #[error("reference weights have zero norm")]
    ZeroReference,
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Top-level error for the experiment drivers and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Invalid(String),
    #[error("unstable filter '{0}': A - K C is not Hurwitz")]
    UnstableFilter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Approx(#[from] ApproxError),
    #[error(transparent)]
    Tpi(#[from] TpiError),
}

impl Error {
    /// Process exit code: 1 for validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Invalid(_) | Error::Io(_) | Error::Csv(_) => 1,
            Error::Plant(PlantError::InvalidParams(_) | PlantError::InvalidDistribution(_)) => 1,
            Error::Approx(ApproxError::Checkpoint(_)) => 1,
            Error::Tpi(TpiError::InvalidConfig(_)) => 1,
            Error::Game(
                GameError::NotDiagonal(_) | GameError::NotPositiveDefinite(_) | GameError::InvalidGamma(_),
            ) => 1,
            _ => 2,
        }
    }

    /// Extra advice for failures with a likely configuration cause.
    pub fn hint(&self) -> Option<&'static str> {
        let linalg = match self {
            Error::Linalg(e) | Error::Game(GameError::Linalg(e)) | Error::Tpi(TpiError::Linalg(e)) => e,
            Error::Tpi(TpiError::Game(GameError::Linalg(e))) => e,
            Error::Tpi(TpiError::Diverged { .. }) => return Some("try smaller learning rates or a smaller state_box"),
            _ => return None,
        };
        match linalg {
            LinalgError::NoStabilizingInit | LinalgError::NewtonDiverged { .. } => {
                Some("the attenuation level gamma may be infeasible for this plant; try a larger gamma")
            }
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
