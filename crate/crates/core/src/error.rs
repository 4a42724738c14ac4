use thiserror::Error;

/// Errors produced while building or solving a discretization.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("degenerate element {element}: {reason}")]
    DegenerateElement { element: usize, reason: String },

    #[error("unsupported quadrature exactness {requested} (supported maximum is {max})")]
    UnsupportedQuadrature { requested: usize, max: usize },

    #[error("degree {degree} too small for {kind} (needs at least {min})")]
    DegreeTooSmall {
        kind: &'static str,
        degree: usize,
        min: usize,
    },

    #[error("diffusion coefficient not positive ({value:e}) at ({x}, {y}) in element {element}")]
    NonPositiveDiffusion {
        element: usize,
        x: f64,
        y: f64,
        value: f64,
    },

    #[error("missing derivative oracle: {0}")]
    MissingDerivative(String),

    #[error("rank deficient local operator on element {element}: singular values {sigma:?}")]
    RankDeficient { element: usize, sigma: Vec<f64> },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular system ({context}): {detail}")]
    SingularSystem { context: String, detail: String },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("missing exact solution for case {0}")]
    MissingExactSolution(String),

    #[error("unknown {what}: {name}")]
    Unknown { what: &'static str, name: String },

    #[error("{context}: {source}")]
    Context {
        context: String,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
