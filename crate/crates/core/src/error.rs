use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    #[error("complex pole {re} {im:+}i; the kernel requires real poles")]
    ComplexPole { re: f64, im: f64 },

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("kernel self-check failed: max deviation {max_dev:e} exceeds {limit:e}")]
    SelfCheck { max_dev: f64, limit: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("singular implicit operator symbol: {0}")]
    SymbolSingular(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel file schema: {0}")]
    Schema(String),

    #[error("kernel invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
