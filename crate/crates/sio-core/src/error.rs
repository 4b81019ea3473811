use thiserror::Error;

/// Error type shared across the crate.
///
/// `Domain` covers invalid parameter ranges (`p < 1`, nonpositive weights,
/// angles past the sector boundary). `Structure` covers mismatched grids and
/// incompatible dimensions. `Construction` covers algorithmic failures with
/// diagnostics, e.g. a sparse family missing its sparsity budget.
#[derive(Debug, Error)]
pub enum SioError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("structural error: {0}")]
    Structure(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("serialization error: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, SioError>;

impl SioError {
    pub fn domain(msg: impl Into<String>) -> Self {
        SioError::Domain(msg.into())
    }
    pub fn structure(msg: impl Into<String>) -> Self {
        SioError::Structure(msg.into())
    }
    pub fn construction(msg: impl Into<String>) -> Self {
        SioError::Construction(msg.into())
    }
}
