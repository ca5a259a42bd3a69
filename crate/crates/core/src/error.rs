use std::fmt;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Position of a parse problem inside a text stream (both 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

/// What went wrong while reading one of the text formats.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("unknown trial type {0:?}")]
    UnknownTrialType(String),
    #[error(
        "bonafide/spoof inconsistency: attack type {attack_type:?} with trial type {trial_type}"
    )]
    BonafideSpoofInconsistency {
        attack_type: String,
        trial_type: String,
    },
    #[error(
        "duplicate trial ({speaker_model}, {test_utterance}), first seen on line {first_line}"
    )]
    DuplicateTrial {
        speaker_model: String,
        test_utterance: String,
        first_line: usize,
    },
    #[error("no trials")]
    NoTrials,
    #[error("invalid number {0:?}")]
    InvalidNumber(String),
    #[error("non-finite value {0:?}")]
    NonFinite(String),
    #[error("duplicate speaker model {speaker_model:?}, first seen on line {first_line}")]
    DuplicateSpeaker {
        speaker_model: String,
        first_line: usize,
    },
    #[error("duplicate utterance {0:?}")]
    DuplicateUtterance(String),
    #[error("speaker model {0:?} has no enrollment utterances")]
    EmptyEnrollment(String),
    #[error("missing \"#dim D\" header")]
    MissingHeader,
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("duplicate embedding id {0:?}")]
    DuplicateEmbedding(String),
    #[error("invalid model file: {0}")]
    InvalidModel(String),
}

/// A located parse failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{location}: {kind}")]
pub struct ParseError {
    pub location: Location,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(line: usize, column: usize, kind: ParseErrorKind) -> Self {
        Self {
            location: Location { line, column },
            kind,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("speaker model {0:?} is missing from the enrollment map")]
    UnknownSpeakerModel(String),
    #[error("protocol has no target trials")]
    NoTargetTrials,
    #[error("protocol has no nontarget or spoof trials")]
    NoNegativeTrials,
    #[error("empty {0} score list")]
    EmptyScores(&'static str),
    #[error("non-finite score in {0} list")]
    NonFiniteScore(&'static str),
    #[error("scores do not match the protocol: {0}")]
    Validation(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("embedding for utterance {0:?} not found")]
    MissingUtterance(String),
    #[error("duplicate embedding id {0:?}")]
    DuplicateEmbedding(String),
    #[error("empty utterance list")]
    EmptyUtteranceList,
    #[error("non-finite value in {0}")]
    NonFiniteValue(&'static str),
    #[error("score sets cover different trials: {0}")]
    TrialSetMismatch(String),
    #[error("degenerate min-max normalizer: min {min} is not below max {max}")]
    DegenerateNormalizer { min: f64, max: f64 },
    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("empty training trial list")]
    EmptyTrainingSet,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
