//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors produced by the core pipeline stages.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A list used for labeling or WER evaluation has no reference transcript.
    MissingReference { utt_id: String },
    /// Training was requested on an empty corpus.
    EmptyCorpus,
    /// A schema block asked for an external feature the hypothesis does not carry.
    MissingFeature {
        utt_id: String,
        hyp_index: usize,
        block: String,
    },
    /// A builtin schema block was requested without the model that backs it.
    MissingModel { block: String },
    /// A vector-valued feature has the wrong dimensionality.
    DimMismatch {
        block: String,
        expected: usize,
        actual: usize,
    },
    /// A vector, normalizer or model was used with a schema it was not built for.
    SchemaMismatch,
    /// Normalizer fitting needs at least two vectors.
    InsufficientData,
    /// Pair construction yielded no trainable pairs.
    NoPairs,
    /// A feature value was NaN or infinite.
    NonFiniteFeature { utt_id: String, block: String },
    /// Labels, vectors and hypotheses for one utterance do not line up.
    Misalignment { utt_id: String },
    /// NDCG cutoff must be at least 1.
    InvalidK,
    /// An operation that selects a hypothesis was given an empty list.
    EmptyList { utt_id: String },
    /// A model was reconstructed from tables that violate its invariants.
    InvalidModel(String),
    /// A schema declaration failed to parse.
    InvalidSchema { line: usize, msg: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MissingReference { utt_id } => {
                write!(f, "MissingReference: utterance {utt_id} has no reference")
            }
            Error::EmptyCorpus => write!(f, "EmptyCorpus: training corpus is empty"),
            Error::MissingFeature {
                utt_id,
                hyp_index,
                block,
            } => write!(
                f,
                "MissingFeature: block {block} absent on {utt_id}#{hyp_index}"
            ),
            Error::MissingModel { block } => {
                write!(f, "MissingModel: block {block} needs a trained model")
            }
            Error::DimMismatch {
                block,
                expected,
                actual,
            } => write!(
                f,
                "DimMismatch: block {block} expected dim {expected}, got {actual}"
            ),
            Error::SchemaMismatch => write!(f, "SchemaMismatch: schema id does not match"),
            Error::InsufficientData => {
                write!(f, "InsufficientData: need at least two vectors to fit")
            }
            Error::NoPairs => write!(f, "NoPairs: no ordered pairs to train on"),
            Error::NonFiniteFeature { utt_id, block } => {
                write!(f, "NonFiniteFeature: block {block} on {utt_id} is not finite")
            }
            Error::Misalignment { utt_id } => {
                write!(f, "Misalignment: labels/vectors/hypotheses differ on {utt_id}")
            }
            Error::InvalidK => write!(f, "InvalidK: NDCG cutoff must be >= 1"),
            Error::EmptyList { utt_id } => {
                write!(f, "EmptyList: utterance {utt_id} has no hypotheses")
            }
            Error::InvalidModel(msg) => write!(f, "InvalidModel: {msg}"),
            Error::InvalidSchema { line, msg } => {
                write!(f, "InvalidSchema: line {line}: {msg}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
