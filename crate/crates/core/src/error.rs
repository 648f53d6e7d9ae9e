use thiserror::Error;

/// Errors raised by the simulation and optimization layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its admissible range or has the wrong shape.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The physical model cannot represent the request faithfully.
    #[error("model error: {0}")]
    Model(String),

    /// A density-matrix trace or Kraus completeness check failed.
    #[error("numerical integrity violated: {0}")]
    NumericalIntegrity(String),

    /// The objective function reported a failure during optimization.
    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
