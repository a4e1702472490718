use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("no frames matching `{pattern}` in {dir}")]
    EmptyStack { dir: PathBuf, pattern: String },
    #[error("geometry mismatch: expected {expected:?}, found {found:?}")]
    GeometryMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("image smaller than one {tile_h}x{tile_w} tile")]
    BadGeometry { tile_h: usize, tile_w: usize },
    #[error("invalid kernel size {0}")]
    BadKernel(usize),
    #[error("invalid NL-means windows: template {template}, search {search}")]
    BadWindow { template: usize, search: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("unknown projection `{0}`")]
    UnknownProjection(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("operator `{0}` belongs to more than one family")]
    OverlappingFamilies(String),
    #[error("image {height}x{width} is too small (needs at least {min}x{min})")]
    TooSmall { height: usize, width: usize, min: usize },
    #[error("no spatially active blocks")]
    NoActiveBlocks,
    #[error("quality model missing: {0}")]
    ModelMissing(String),
    #[error("malformed model file: {0}")]
    ModelFormat(String),
    #[error("corpus too small: {found} usable images, need {needed}")]
    CorpusTooSmall { found: usize, needed: usize },
    #[error("empty input")]
    Empty,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<image::ImageError> for Error {
    fn from(err: image::ImageError) -> Self {
        match err {
            image::ImageError::IoError(e) => Error::Io(e),
            other => Error::Decode {
                path: PathBuf::new(),
                reason: other.to_string(),
            },
        }
    }
}
