//! Named-entity recognition toolkit built around shallow local features,
//! stacked word-clustering features and an averaged perceptron sequence
//! labeler.
//!
//! The crate is organized by pipeline stage:
//!
//! * [`corpus`] — CoNLL column I/O, BIO/BILOU codecs, corpus splits.
//! * [`lexicons`] — the external knowledge sources: Brown path lexicons,
//!   flat cluster lexicons, gazetteers and embedding tables.
//! * [`features`] — sparse binary feature extraction.
//! * [`induce`] — desk-scale Brown clustering and K-means over embeddings.
//! * [`model`] — averaged perceptron training and constrained beam decoding.
//! * [`eval`] — conlleval-style phrase and token scoring plus the
//!   training-data-reduction harness.
//! * [`config`] — the TOML run configuration consumed by the CLI.

pub mod config;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod induce;
pub mod lexicons;
pub mod model;

pub use corpus::{Corpus, Document, Sentence, Span, TagScheme, Token};
pub use eval::EvalReport;
pub use features::{DecodeState, FeatureConfig};
pub use model::PerceptronModel;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("model file error: {0}")]
    Model(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
