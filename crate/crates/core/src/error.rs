use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("solver did not converge after {iterations} sweeps (residual {residual:e}, tolerance {tolerance:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("point {re} + {im}i lies outside the domain")]
    OutsideDomain { re: f64, im: f64 },

    #[error("disk of radius {radius} about {re} + {im}i leaves the domain")]
    DiskOutsideDomain { re: f64, im: f64, radius: f64 },

    #[error("degenerate value: {0}")]
    Degenerate(String),

    #[error("model file {path}: {reason}")]
    Model { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::NonConvergence { .. } => 2,
            _ => 4,
        }
    }
}
