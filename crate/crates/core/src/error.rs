use thiserror::Error;

use crate::backends::BackendError;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("undefined ratio: baseline IoU is zero")]
    UndefinedRatio,

    #[error("undefined direction: zero-length embedding vector")]
    UndefinedDirection,

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("detection failed for {image}: {source}")]
    Detection {
        image: String,
        #[source]
        source: BackendError,
    },

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("image codec error: {0}")]
    Codec(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
