use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its documented range.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("boundary is singular (cusp) at theta = {theta}")]
    Singularity { theta: f64 },

    #[error("numerical blow-up (non-finite amplitude) at step {step}")]
    NumericalBlowup { step: usize },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("polar radius {r_max} does not cover the billiard (needs >= {required})")]
    Coverage { r_max: f64, required: f64 },

    #[error("{mass:e} of the packet norm lies outside the grid")]
    Truncation { mass: f64 },

    #[error("reduced density matrix has eigenvalue {value:e} below the clamp threshold")]
    NegativeEigenvalue { value: f64 },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("no boundary crossing found along ray launched from theta = {theta}")]
    Geometric { theta: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Coverage { .. } | Error::Truncation { .. } => 2,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}
