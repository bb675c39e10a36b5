use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("empty image: no active voxels")]
    EmptyImage,

    #[error("size mismatch: header declares {expected} voxels, payload has {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("checksum mismatch")]
    Checksum,

    #[error("unsupported format version {0}")]
    Version(u32),

    #[error("feature bank mismatch: model expects {expected}, input has {found}")]
    BankMismatch { expected: String, found: String },

    #[error("feature length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("training needs at least two classes, found {0}")]
    SingleClass(usize),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("all {0} inputs failed to featurize")]
    AllFailed(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
