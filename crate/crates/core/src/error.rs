use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh request: {0}")]
    InvalidMesh(String),

    #[error("quadrature exactness {requested} exceeds the supported ceiling {ceiling}")]
    UnsupportedQuadrature { requested: usize, ceiling: usize },

    #[error("unsupported element: {0}")]
    UnsupportedElement(String),

    #[error("element construction failed: {0}")]
    ElementConstruction(String),

    #[error("scheme `{scheme}` is incompatible with {mesh} meshes")]
    IncompatibleMesh { scheme: &'static str, mesh: &'static str },

    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    #[error("structural invariant violated: {0}")]
    Structure(String),

    #[error("matrix is numerically singular at pivot {column} (|pivot| = {magnitude:e})")]
    Singular { column: usize, magnitude: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    SolveResidual { residual: f64, tolerance: f64 },

    #[error("invalid convergence data: {0}")]
    InvalidConvergenceData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
