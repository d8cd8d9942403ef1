use thiserror::Error;

use crate::params::ParamErrors;
use crate::quadrature::QuadError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Validation(#[from] ParamErrors),

    #[error("domain error: {0}")]
    Domain(String),

    #[error(transparent)]
    Quadrature(#[from] QuadError),

    #[error("non-finite integrand value {value} at distances {distances:?}")]
    NonFinite { value: f64, distances: Vec<f64> },

    #[error(
        "under-populated deployment: fewer than K={k} APs after {attempts} draws \
         (expected count lambda*pi*R^2 = {expected:.3})"
    )]
    UnderPopulated {
        k: usize,
        expected: f64,
        attempts: usize,
    },

    #[error("aborted after {partial_n} completed trials (partial mean {partial_mean}): {source}")]
    Aborted {
        source: Box<Error>,
        partial_mean: f64,
        partial_n: usize,
    },

    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
