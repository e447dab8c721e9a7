use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid disorder: {0}")]
    InvalidDisorder(String),

    #[error("invalid spectral point: {0}")]
    InvalidSpectralPoint(String),

    #[error("singular point: denominator vanished at {0}")]
    SingularPoint(String),

    #[error("Herglotz property violated: Im = {im:e} at {context}")]
    NotHerglotz { im: f64, context: String },

    #[error("pool too small: {size} < {min}")]
    PoolTooSmall { size: usize, min: usize },

    #[error("unsupported here: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric failure: {message} (residual {residual:e})")]
    Numeric { message: String, residual: f64 },

    #[error("mismatched grids: {0}")]
    MismatchedGrids(String),

    #[error("singular junction: {0}")]
    SingularJunction(String),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

pub type Result<T> = std::result::Result<T, Error>;
