use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid manifest: {0}")]
    Manifest(String),

    #[error("invalid class registry: {0}")]
    Registry(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("{0}")]
    InvalidArgument(String),

    #[error("degenerate transform: {0}")]
    DegenerateTransform(String),

    #[error("patch of {patch_width}x{patch_height} at ({x}, {y}) does not fit a {width}x{height} background")]
    PlacementOutOfBounds {
        x: usize,
        y: usize,
        patch_width: usize,
        patch_height: usize,
        width: usize,
        height: usize,
    },

    #[error("patch has empty alpha support, no box can be emitted")]
    EmptySupport,

    #[error("record {index}: no placement found after {attempts} attempts ({detail})")]
    Sizing {
        index: usize,
        attempts: usize,
        detail: String,
    },

    #[error("empty region mask")]
    EmptyMask,

    #[error("merge rule conflict: source class {name:?} matches both {first:?} and {second:?}")]
    MergeConflict {
        name: String,
        first: String,
        second: String,
    },

    #[error("supervised class {0:?} has no designated trainval images")]
    MissingTrainval(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Image {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Short machine-readable tag for error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Manifest(_) => "manifest",
            Error::Registry(_) => "registry",
            Error::Config(_) => "config",
            Error::Image { .. } => "image",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DegenerateTransform(_) => "degenerate-transform",
            Error::PlacementOutOfBounds { .. } => "placement-out-of-bounds",
            Error::EmptySupport => "empty-support",
            Error::Sizing { .. } => "sizing",
            Error::EmptyMask => "empty-mask",
            Error::MergeConflict { .. } => "merge-conflict",
            Error::MissingTrainval(_) => "missing-trainval",
            Error::Internal(_) => "internal",
        }
    }

    /// Whether the failure is attributable to user input rather than a bug.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }
}
