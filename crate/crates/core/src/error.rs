use thiserror::Error;

use crate::geometry::Frame;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("frame mismatch: cannot chain a pose from `{left_from}` with a pose into `{right_to}`")]
    FrameMismatch { left_from: Frame, right_to: Frame },

    #[error("invalid rotation matrix: {0}")]
    InvalidRotation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("planning failed: {0}")]
    Planning(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn planning(msg: impl Into<String>) -> Self {
        Error::Planning(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
