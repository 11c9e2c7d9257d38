use thiserror::Error;

/// Errors produced by the channel model, capacity paths and CLI front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("quadrature did not converge on [{lo:e}, {hi:e}]: estimate {estimate:e}, error {error:e} after {segments} segments")]
    QuadratureNonConvergence {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
        segments: usize,
    },

    #[error("density quadrature failed at h = {h:e}: {source}")]
    DensityQuadrature {
        h: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("Whittaker W evaluation failed at (a={a}, b={b}, z={z}): {reason}")]
    Whittaker { a: f64, b: f64, z: f64, reason: String },

    #[error("density invariant violated: {0}")]
    DensityViolation(String),

    #[error("convergence-violating parameter set: {0}")]
    KernelViolation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
