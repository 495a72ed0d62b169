use std::path::PathBuf;

use crate::types::Structure;

/// Errors produced anywhere in the measurement pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("thorax box has zero width")]
    ZeroThoraxWidth,

    #[error("invalid bounding box: {0}")]
    InvalidBox(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("phantom does not fit the canvas: {0}")]
    SpecOutOfBounds(String),

    #[error("invalid phantom spec: {0}")]
    InvalidSpec(String),

    #[error("degenerate transform: {0}")]
    DegenerateTransform(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("no foreground pixels in {0} mask")]
    EmptyMask(Structure),

    #[error("no pairs to evaluate")]
    EmptyEvaluation,

    #[error("no pair has a successful prediction")]
    NoSuccessfulPairs,

    #[error("cannot read image {path}: {reason}")]
    UnreadableImage { path: PathBuf, reason: String },

    #[error("unsupported bit depth in {path}: {found}")]
    UnsupportedBitDepth { path: PathBuf, found: String },

    #[error("image {image}: no {structure} region")]
    MissingRegion { image: String, structure: Structure },

    #[error("image {image}: more than one {structure} region")]
    DuplicateRegion { image: String, structure: Structure },

    #[error("malformed document: {0}")]
    MalformedDocument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
