use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("unphysical covariance: smallest symplectic eigenvalue {min_nu} < 1")]
    Unphysical { min_nu: f64 },

    #[error("channel is not completely positive (min eigenvalue {min_eig})")]
    ChannelValidity { min_eig: f64 },

    #[error("truncation budget exceeded: {what} (tail {tail:e}, tolerance {tol:e}, required cutoff {required})")]
    Truncation { what: String, tail: f64, tol: f64, required: usize },

    #[error("support violation: {0}")]
    Support(String),

    #[error("state is not positive: eigenvalue {0}")]
    NotPositive(f64),

    #[error("infeasible: {constraint}")]
    Infeasible { constraint: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("internal numerical error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
