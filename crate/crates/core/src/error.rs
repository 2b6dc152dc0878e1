use thiserror::Error;

/// Errors raised by the engine, the oracle and the checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// An S-matrix denominator vanished (or came too close to zero).
    #[error("S-matrix pole: |denominator| = {denominator:.3e}, |numerator| = {numerator:.3e}")]
    Pole { denominator: f64, numerator: f64 },

    #[error("quadrature did not converge at {nodes} nodes: last iterates {previous:.17e} and {last:.17e}")]
    NonConvergence {
        previous: f64,
        last: f64,
        nodes: usize,
    },

    #[error("contour certification failed: {0}")]
    Certification(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("precision loss: {0}")]
    Precision(String),
}

pub type Result<T> = std::result::Result<T, Error>;
