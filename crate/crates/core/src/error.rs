//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed text input (dictionary, map, frame, model or report files).
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// A phoneme symbol outside the configured inventory.
    #[error("unknown phoneme '{0}'")]
    UnknownPhoneme(String),

    /// A transcript or count label that no viseme class defines.
    #[error("unknown label '{0}'")]
    UnknownLabel(String),

    /// A word with no dictionary entry.
    #[error("out-of-vocabulary word '{0}'")]
    OutOfVocabulary(String),

    /// A viseme map that is not a partition of its inventory.
    #[error("viseme map is not a partition: {0}")]
    PartitionViolation(String),

    /// Garbage merging removed every trainable class.
    #[error("garbage merge would leave no trainable viseme class")]
    NoTrainableClasses,

    /// Vector or frame dimension disagreement.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Parameter-vector length disagreement.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Empty input where data is required.
    #[error("empty input: {0}")]
    EmptyData(String),

    /// A model label absent from the model set.
    #[error("no model for label '{0}'")]
    MissingModel(String),

    /// A word without a viseme expansion in a network or alignment lattice.
    #[error("word '{0}' has no viseme expansion")]
    MissingExpansion(String),

    /// The transcript cannot fit in the utterance.
    #[error("infeasible alignment: {frames} frames cannot fit a transcript needing at least {min_frames}")]
    InfeasibleAlignment { frames: usize, min_frames: usize },

    /// Viterbi found no complete path.
    #[error("decode failure: {0}")]
    DecodeFailure(String),

    /// Scoring over an empty reference.
    #[error("undefined score: reference length is zero")]
    UndefinedScore,

    /// Correlation over rankings with zero rank variance.
    #[error("undefined correlation: zero rank variance")]
    UndefinedCorrelation,

    /// Invalid configuration or precondition violation.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Filesystem failure, tagged with the offending path.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A recipe stage failure wrapped with the stage name.
    #[error("stage '{stage}': {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wrap an error with recipe stage context.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// The innermost error, unwrapping stage contexts.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
