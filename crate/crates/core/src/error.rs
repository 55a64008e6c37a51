use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular matrix in {block} block: zero pivot at index {index}")]
    Singular { block: &'static str, index: usize },

    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("Picard iteration stopped after {iterations} iterations, last relative change {change:e}")]
    PicardNonconvergence { iterations: usize, change: f64 },

    #[error("eigenvalue iteration did not converge after {0} iterations")]
    EigenNonconvergence(usize),

    #[error("undefined convergence rate: nonpositive error {0}")]
    UndefinedRate(f64),

    #[error("no exact or reference solution available")]
    MissingReference,

    #[error("boundary elimination removed every degree of freedom")]
    EmptySystem,

    #[error("time step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Whether the error is (or wraps) a nonlinear or linear solver failure
    /// rather than bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Singular { .. }
            | Error::Residual { .. }
            | Error::PicardNonconvergence { .. }
            | Error::EigenNonconvergence(_) => true,
            Error::Step { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
