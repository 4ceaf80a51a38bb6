use std::path::PathBuf;

use thiserror::Error;

use crate::types::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid value: {0}")]
    Invalid(#[from] Violation),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("insufficient tissue: {tissue} of {total} pixels above OD threshold (need {required})")]
    InsufficientTissue {
        tissue: usize,
        total: usize,
        required: usize,
    },

    #[error("degenerate factorization: {0}")]
    DegenerateFactorization(String),

    #[error("need at least {k} distinct feature vectors, found {distinct}")]
    TooFewDistinct { k: usize, distinct: usize },

    #[error("point set is empty")]
    EmptyPoints,

    #[error("loss support is empty: every pixel is ignored")]
    EmptySupport,

    #[error("{0}")]
    OutOfRange(String),

    #[error("patch {patch} larger than image {width}x{height}")]
    PatchTooLarge {
        patch: usize,
        width: usize,
        height: usize,
    },

    #[error("pixel ({x}, {y}) not covered by any patch")]
    Uncovered { x: usize, y: usize },
}

pub(crate) fn check_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
