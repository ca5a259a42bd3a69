//! Evaluation and fusion toolkit for spoofing-aware speaker verification.
//!
//! Reads ASV trial protocols, enrollment maps, score files and embedding
//! stores; computes SV-, SPF- and SASV-EERs; fuses ASV and CM systems by
//! score sum or with an MLP back-end over embeddings; and generates
//! synthetic fixtures with known EERs.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`). The aliases at
//! the crate root fix the scalar to `f64`, which the file readers and the
//! command-line tool use.

pub mod embedding;
pub mod error;
pub mod fusion;
pub mod metrics;
pub mod protocol;
pub mod rng;
pub mod scalar;
pub mod score_io;
pub mod synth;
mod text;

pub use error::{Error, Location, ParseError, ParseErrorKind, Result};
pub use protocol::{EnrollmentMap, Trial, TrialList, TrialProtocol, TrialType};
pub use scalar::Scalar;
pub use score_io::{ResultsSummary, ValidationReport};

pub type ScoreRecord = score_io::ScoreRecord<f64>;
pub type ScoreSet = score_io::ScoreSet<f64>;
pub type LabeledScores = metrics::LabeledScores<f64>;
pub type EerResult = metrics::EerResult<f64>;
pub type EerReport = metrics::EerReport<f64>;
pub type RocPoint = metrics::RocPoint<f64>;
pub type EmbeddingStore = embedding::EmbeddingStore<f64>;
pub type MlpBackend = fusion::MlpBackend<f64>;
pub type ScoreNormalizer = fusion::ScoreNormalizer<f64>;
pub type TrainedBackend = fusion::TrainedBackend<f64>;
pub type SyntheticEmbeddings = synth::SyntheticEmbeddings<f64>;

pub type ScoreSetF32 = score_io::ScoreSet<f32>;
pub type EmbeddingStoreF32 = embedding::EmbeddingStore<f32>;
pub type MlpBackendF32 = fusion::MlpBackend<f32>;
