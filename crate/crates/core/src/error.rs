use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape { expected: Vec<usize>, found: Vec<usize> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("prox not well defined: nu * rho_wc = {product} >= 1 (nu = {nu}, rho_wc = {rho})")]
    Nonproxable { nu: f64, rho: f64, product: f64 },

    #[error("inner prox solver did not converge after {iterations} iterations (residual {residual:e})")]
    InnerSolve { residual: f64, iterations: usize },

    #[error("certificate error: {0}")]
    Certificate(String),

    #[error("structural condition violated: {0}")]
    Structure(String),

    #[error("training diverged at epoch {epoch}: {reason}")]
    TrainingDiverged { epoch: usize, reason: String },

    #[error("iterates diverged at iteration {iteration}: norm {norm:e}")]
    Divergence { iteration: usize, norm: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(expected: &[usize], found: &[usize]) -> Self {
        Error::Shape {
            expected: expected.to_vec(),
            found: found.to_vec(),
        }
    }
}
