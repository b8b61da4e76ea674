use thiserror::Error;

/// Errors produced by the solver, the oracles and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("metric is singular: factorization failed up to ridge {ridge:e}")]
    SingularMetric { ridge: f64 },

    #[error("dual entropy solve diverged after {iterations} iterations")]
    DualSolve { iterations: usize },

    #[error("map is not increasing at sample {index} (derivative {derivative:e})")]
    NonMonotone { index: usize, derivative: f64 },

    #[error("matrix is singular or not orientation preserving (det {det:e})")]
    SingularMatrix { det: f64 },

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    Unstable { dt: f64, bound: f64 },

    #[error("gibbs weight underflows to zero on the whole grid")]
    GibbsUnderflow,

    #[error("empty input to {0}")]
    Empty(&'static str),

    #[error("snapshot time grids differ: {0}")]
    TimeGridMismatch(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short tag used in the CLI's one-line error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::NonFinite(_) => "non-finite",
            Error::SingularMetric { .. } => "singular-metric",
            Error::DualSolve { .. } => "dual-solve",
            Error::NonMonotone { .. } => "non-monotone",
            Error::SingularMatrix { .. } => "singular-matrix",
            Error::Unstable { .. } => "unstable-step",
            Error::GibbsUnderflow => "gibbs-underflow",
            Error::Empty(_) => "empty-input",
            Error::TimeGridMismatch(_) => "time-grid-mismatch",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
