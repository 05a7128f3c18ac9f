use thiserror::Error;

use crate::io::model_file::ModelFileError;
use crate::io::pnm::PnmError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("feature {dim} has value {value}, outside [0, {range})")]
    ValueOutOfRange { dim: usize, value: u32, range: u32 },

    #[error("category {category} outside [1, {categories}]")]
    CategoryOutOfRange { category: u32, categories: u32 },

    #[error("cannot create a class from an empty pattern")]
    EmptyPattern,

    #[error("model has no posting lists")]
    EmptyModel,

    #[error("no evidence: the histogram is empty")]
    NoEvidence,

    #[error("image mismatch: {0}")]
    ImageMismatch(String),

    #[error("level {level}: {source}")]
    Level {
        level: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: usize,
        message: String,
    },

    #[error("schema: {0}")]
    Schema(String),

    #[error(transparent)]
    Pnm(#[from] PnmError),

    #[error(transparent)]
    ModelFile(#[from] ModelFileError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::Level {
            level,
            source: Box::new(self),
        }
    }

    /// True for errors caused by the input data rather than by the caller's setup.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Config(_) => false,
            Error::Level { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}
