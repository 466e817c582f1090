//! Crate-wide error type.

use thiserror::Error;

use crate::grid::GridCell;

#[derive(Error, Debug)]
pub enum Error {
    #[error("grid shape mismatch: expected {expected_width}x{expected_height}, got {got_width}x{got_height}")]
    ShapeMismatch {
        expected_width: usize,
        expected_height: usize,
        got_width: usize,
        got_height: usize,
    },

    #[error("cell ({row}, {col}) out of bounds for a {width}x{height} grid")]
    OutOfBounds {
        row: usize,
        col: usize,
        width: usize,
        height: usize,
    },

    #[error("unknown category id {0}")]
    UnknownCategory(u16),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no path from ({}, {})", start.row, start.col)]
    NoPath { start: GridCell },

    #[error("scene generation failed: {0}")]
    Generation(String),

    #[error("parse error ({context}): {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
