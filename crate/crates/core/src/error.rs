use thiserror::Error;

/// Errors surfaced by the estimation pipeline.
#[derive(Debug, Error)]
pub enum FdeError {
    #[error("column {dim} is constant (zero range); rescaling to the unit cube is undefined")]
    ConstantColumn { dim: usize },

    #[error("column {dim} is degenerate: zero sample variance and zero interquartile range")]
    DegenerateColumn { dim: usize },

    #[error("evaluation grids do not match: {0}")]
    GridMismatch(String),

    #[error("point lies outside the unit cube: coordinate {dim} = {value}")]
    OutOfCube { dim: usize, value: f64 },

    #[error("edge set is not a single connected tree: {0}")]
    NotATree(String),

    #[error("sample covariance is singular; need more samples than dimensions (n1 > d) or a lower-dimensional model")]
    SingularCovariance,

    #[error("precision matrix is not positive definite after {retries} block resamples")]
    NotPositiveDefinite { retries: usize },

    #[error("parse error at line {line}{}: {detail}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: usize,
        column: Option<usize>,
        detail: String,
    },

    #[error("model file rejected: {0}")]
    ModelFormat(String),

    #[error("training data does not match the model: expected content hash {expected}, got {actual}")]
    TrainHashMismatch { expected: String, actual: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FdeError>;
