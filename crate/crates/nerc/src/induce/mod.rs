//! Desk-scale induction of cluster lexicons: corpus preprocessing, Brown
//! clustering and K-means over externally supplied embeddings.

mod brown;
mod kmeans;

pub use brown::{induce_brown, induce_brown_observed, MergeStep};
pub use kmeans::{kmeans, kmeans_detailed, KmeansRun};

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InductionMode {
    Brown,
    Flat,
}

/// Knobs shared by the induction subcommands.
#[derive(Debug, Clone)]
pub struct InductionConfig {
    pub mode: InductionMode,
    /// Number of Brown classes C, or K for K-means.
    pub classes: usize,
    pub min_count: u64,
    pub seed: u64,
    pub max_iters: usize,
}

impl InductionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::invalid("need at least 2 classes"));
        }
        if self.min_count < 1 {
            return Err(Error::invalid("min_count must be at least 1"));
        }
        if self.max_iters < 1 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Sentences of word strings after preprocessing; no sentence is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    pub sentences: Vec<Vec<String>>,
}

fn is_punctuation(token: &str) -> bool {
    !token.chars().any(char::is_alphanumeric)
}

/// Preprocesses tokenized sentences for induction. Brown mode preserves
/// case, drops punctuation-only tokens and removes sentences whose letter
/// characters are less than 90% lowercase. Flat mode lowercases everything
/// and drops punctuation-only tokens.
pub fn preprocess<S: AsRef<str>>(raw: &[Vec<S>], mode: InductionMode) -> TokenStream {
    let mut sentences = Vec::new();
    for sentence in raw {
        let kept: Vec<&str> = sentence
            .iter()
            .map(AsRef::as_ref)
            .filter(|t| !is_punctuation(t))
            .collect();
        if kept.is_empty() {
            continue;
        }
        match mode {
            InductionMode::Brown => {
                let mut letters = 0u64;
                let mut lowers = 0u64;
                for ch in kept.iter().flat_map(|t| t.chars()) {
                    if ch.is_alphabetic() {
                        letters += 1;
                        if ch.is_lowercase() {
                            lowers += 1;
                        }
                    }
                }
                if letters > 0 && (lowers as f64) < 0.9 * letters as f64 {
                    continue;
                }
                sentences.push(kept.iter().map(|t| t.to_string()).collect());
            }
            InductionMode::Flat => {
                sentences.push(kept.iter().map(|t| t.to_lowercase()).collect());
            }
        }
    }
    TokenStream { sentences }
}

/// Reads a raw corpus: one sentence per line, whitespace-separated tokens.
pub fn read_raw_sentences(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    let mut sentences = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let tokens: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if !tokens.is_empty() {
            sentences.push(tokens);
        }
    }
    Ok(sentences)
}
