use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size mismatch: {0} vs {1}")]
    GridMismatch(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cell index {index} out of range for {n_cells} cells")]
    IndexOutOfRange { index: usize, n_cells: usize },

    #[error("not a probability measure: total mass {0}")]
    NotProbability(f64),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("weights are not a point of the simplex: {0}")]
    NotSimplex(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("families have no separating sets at the requested resolution")]
    NoSeparation,

    #[error("singular operator: {0}")]
    SingularOperator(String),

    #[error("hull solver did not converge: best value {value}, gap {gap}")]
    HullNoConvergence { value: f64, gap: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
