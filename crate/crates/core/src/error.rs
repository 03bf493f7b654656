use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain on which a quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The parametrisation of the mid-surface is degenerate.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A run or discretisation was configured inconsistently.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A linear system could not be factorised.
    #[error("singular system: {null_dim} near-zero pivot(s), first at equation {first}")]
    Singular { null_dim: usize, first: usize },

    /// An iterative eigensolver did not reach the requested residual.
    #[error("eigensolver did not converge: {converged}/{requested} pairs after basis size {basis}, worst residual {residual:.3e}")]
    Convergence { requested: usize, converged: usize, basis: usize, residual: f64 },

    /// The prestress state never destabilises the plate.
    #[error("no positive critical load factor found")]
    NoPositiveEigenvalue,

    /// Indexing or bookkeeping failure that indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
