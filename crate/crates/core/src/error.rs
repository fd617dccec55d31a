use thiserror::Error;

/// Errors produced by distribution evaluation and inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A Conway-Maxwell-Poisson series that does not converge.
    #[error("series diverges for lambda = {lambda}, nu = {nu}")]
    Divergent { lambda: f64, nu: f64 },

    /// An enumeration or series would exceed its configured size cap.
    #[error("{what} needs {required} terms, cap is {cap}")]
    CapExceeded {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    /// A computation produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Newton iteration did not reach the gradient tolerance.
    #[error("optimizer did not converge after {iterations} iterations (last gradient norm {grad_norm:e})")]
    NoConvergence {
        iterations: usize,
        grad_norm: f64,
        trace: Vec<[f64; 2]>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
