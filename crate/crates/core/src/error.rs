use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("knot vector needs at least one element")]
    ZeroElements,
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),
    #[error("point {0:?} lies outside the domain")]
    OutOfDomain([f64; 2]),
    #[error("face is on the ambient boundary and has no two-sided trace")]
    BoundaryFace,
    #[error("background mesh is empty: no cell intersects the physical domain")]
    EmptyDomain,
    #[error("missing quadrature for active cell {0}")]
    MissingQuadrature(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("singular system (smallest pivot {pivot:e})")]
    Singular { pivot: f64 },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("eigen solver failed: {0}")]
    Eigen(String),
    #[error("picard iteration did not converge in {iterations} iterations (last increment {increment:e})")]
    NotConverged { iterations: usize, increment: f64 },
    #[error("unknown manufactured solution `{0}`")]
    UnknownSolution(String),
    #[error("extraction field overlaps another Dirichlet boundary: {0}")]
    ExtractionOverlap(String),
    #[error("non-positive error value {0} in convergence table")]
    NonPositiveError(f64),
    #[error("convergence table needs at least two rows")]
    TooFewRows,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics (as opposed to usage or I/O).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular { .. }
            | Error::Factorization(_)
            | Error::Residual { .. }
            | Error::Eigen(_)
            | Error::NotConverged { .. } => true,
            Error::Context { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
