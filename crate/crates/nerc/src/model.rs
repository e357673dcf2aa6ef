//! Averaged-perceptron sequence labeler with constrained beam decoding.
//!
//! Decoding never emits a label sequence that violates the tag scheme, so
//! downstream span extraction needs no repair. Training performs structured
//! sentence-level updates and keeps the exact running mean of the weight
//! trajectory through lazy bookkeeping.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{convert_scheme, decode_labels, detect_scheme, Corpus, Sentence, TagScheme};
use crate::features::{extract, DecodeState, FeatureConfig};
use crate::{Error, Result};

const MODEL_MAGIC: &str = "nerc-model";
const MODEL_VERSION: u32 = 1;

pub const DEFAULT_BEAM: usize = 3;
pub const DEFAULT_EPOCHS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptronModel {
    /// Scheme-expanded label list; `O` comes first and breaks score ties.
    pub labels: Vec<String>,
    /// Raw weight rows, one value per label.
    pub weights: HashMap<String, Vec<f64>>,
    /// Averaged weight rows used at inference.
    pub averaged: HashMap<String, Vec<f64>>,
    pub config: FeatureConfig,
    pub beam: usize,
    pub trained_epochs: usize,
}

/// Builds the scheme-expanded label list for a set of entity types.
pub fn expand_labels(types: &[String], scheme: TagScheme) -> Vec<String> {
    let mut labels = vec!["O".to_string()];
    for ty in types {
        match scheme {
            TagScheme::Bio => {
                labels.push(format!("B-{ty}"));
                labels.push(format!("I-{ty}"));
            }
            TagScheme::Bilou => {
                labels.push(format!("B-{ty}"));
                labels.push(format!("I-{ty}"));
                labels.push(format!("L-{ty}"));
                labels.push(format!("U-{ty}"));
            }
        }
    }
    labels
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Outside,
    Begin(usize),
    Inside(usize),
    Last(usize),
    Unit(usize),
}

fn label_kinds(labels: &[String]) -> Vec<Kind> {
    let mut type_ids: HashMap<&str, usize> = HashMap::new();
    labels
        .iter()
        .map(|label| {
            if label == "O" {
                return Kind::Outside;
            }
            let (prefix, ty) = label.split_once('-').expect("non-O labels carry a type");
            let next = type_ids.len();
            let ty = *type_ids.entry(ty).or_insert(next);
            match prefix {
                "B" => Kind::Begin(ty),
                "I" => Kind::Inside(ty),
                "L" => Kind::Last(ty),
                "U" => Kind::Unit(ty),
                other => panic!("unexpected label prefix {other}"),
            }
        })
        .collect()
}

/// Whether `next` may follow `prev` under the scheme. `is_last` additionally
/// forbids leaving a chunk open at the end of the sentence in BILOU.
fn allowed(scheme: TagScheme, prev: Option<Kind>, next: Kind, is_last: bool) -> bool {
    let open = match prev {
        Some(Kind::Begin(t)) | Some(Kind::Inside(t)) => Some(t),
        _ => None,
    };
    match scheme {
        TagScheme::Bio => match next {
            Kind::Inside(t) => open == Some(t),
            Kind::Outside | Kind::Begin(_) => true,
            Kind::Last(_) | Kind::Unit(_) => false,
        },
        TagScheme::Bilou => match open {
            None => match next {
                Kind::Outside | Kind::Unit(_) => true,
                Kind::Begin(_) => !is_last,
                Kind::Inside(_) | Kind::Last(_) => false,
            },
            Some(t) => match next {
                Kind::Inside(u) => u == t && !is_last,
                Kind::Last(u) => u == t,
                _ => false,
            },
        },
    }
}

#[derive(Debug, Clone)]
struct Hypothesis {
    score: f64,
    labels: Vec<u16>,
}

impl Hypothesis {
    fn beats(&self, other: &Hypothesis) -> bool {
        self.score > other.score || (self.score == other.score && self.labels < other.labels)
    }
}

/// Beam search over per-position label scores with scheme-validity pruning.
/// Hypotheses ending in the same label are recombined, so a beam at least as
/// wide as the label set performs exact search; ties prefer the sequence
/// that is lexicographically smallest in label order.
fn decode_from_scores(
    scores: &[Vec<f64>],
    kinds: &[Kind],
    scheme: TagScheme,
    beam: usize,
) -> Vec<u16> {
    let n = scores.len();
    if n == 0 {
        return Vec::new();
    }
    let beam = beam.max(1);
    let mut hyps = vec![Hypothesis {
        score: 0.0,
        labels: Vec::new(),
    }];
    for (i, row) in scores.iter().enumerate() {
        let is_last = i + 1 == n;
        let mut best: HashMap<Option<u16>, Hypothesis> = HashMap::new();
        for hyp in &hyps {
            let prev = hyp.labels.last().map(|&l| kinds[l as usize]);
            for (label, &score) in row.iter().enumerate() {
                if !allowed(scheme, prev, kinds[label], is_last) {
                    continue;
                }
                let mut labels = hyp.labels.clone();
                labels.push(label as u16);
                let candidate = Hypothesis {
                    score: hyp.score + score,
                    labels,
                };
                match best.get(&Some(label as u16)) {
                    Some(existing) if !candidate.beats(existing) => {}
                    _ => {
                        best.insert(Some(label as u16), candidate);
                    }
                }
            }
        }
        let mut merged: Vec<Hypothesis> = best.into_values().collect();
        merged.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .expect("scores are finite")
                .then_with(|| a.labels.cmp(&b.labels))
        });
        merged.truncate(beam);
        hyps = merged;
        debug_assert!(!hyps.is_empty(), "a valid continuation always exists");
    }
    // hyps stays sorted best-first under the tie rule
    hyps.swap_remove(0).labels
}

impl PerceptronModel {
    /// A zero-initialized model over the given label list.
    pub fn new(labels: Vec<String>, config: FeatureConfig, beam: usize) -> Self {
        PerceptronModel {
            labels,
            weights: HashMap::new(),
            averaged: HashMap::new(),
            config,
            beam,
            trained_epochs: 0,
        }
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Inference-side score of one feature vector for one label, from the
    /// averaged weights. Missing features contribute zero.
    pub fn score(&self, fv: &[String], label: &str) -> f64 {
        let Some(idx) = self.label_index(label) else {
            return 0.0;
        };
        fv.iter()
            .filter_map(|f| self.averaged.get(f).map(|row| row[idx]))
            .sum()
    }

    fn score_rows(table: &HashMap<String, Vec<f64>>, fv: &[String], n: usize) -> Vec<f64> {
        let mut row = vec![0.0; n];
        for f in fv {
            if let Some(weights) = table.get(f) {
                for (acc, w) in row.iter_mut().zip(weights) {
                    *acc += w;
                }
            }
        }
        row
    }

    /// Decodes one sentence with the averaged weights. `state` is the
    /// document-scoped previous-prediction memory, frozen for the whole
    /// sentence; committing the returned labels is the caller's business.
    pub fn decode(&self, sentence: &Sentence, state: &DecodeState) -> Vec<String> {
        let scores: Vec<Vec<f64>> = (0..sentence.len())
            .map(|i| {
                let fv = extract(sentence, i, state, &self.config);
                Self::score_rows(&self.averaged, &fv, self.labels.len())
            })
            .collect();
        let kinds = label_kinds(&self.labels);
        decode_from_scores(&scores, &kinds, self.config.scheme, self.beam)
            .into_iter()
            .map(|l| self.labels[l as usize].clone())
            .collect()
    }

    /// Tags a whole corpus, resetting the prediction memory at document
    /// boundaries and committing each decoded sentence.
    pub fn tag_corpus(&self, corpus: &Corpus) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(corpus.sentence_count());
        let mut state = DecodeState::new();
        for doc in &corpus.documents {
            state.clear();
            for sentence in &doc.sentences {
                let labels = self.decode(sentence, &state);
                state.commit(sentence, &labels);
                out.push(labels);
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path.as_ref())?;
        let stored = StoredModel {
            magic: MODEL_MAGIC.to_string(),
            version: MODEL_VERSION,
            beam: self.beam,
            trained_epochs: self.trained_epochs,
            labels: self.labels.clone(),
            config: self.config.clone(),
            weights: self
                .weights
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            averaged: self
                .averaged
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        };
        serde_json::to_writer(BufWriter::new(file), &stored)
            .map_err(|e| Error::Model(format!("cannot write model: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PerceptronModel> {
        let path = path.as_ref();
        let file = File::open(path)
            .map_err(|e| Error::Model(format!("cannot open {}: {e}", path.display())))?;
        let stored: StoredModel = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Model(format!("truncated or malformed model file: {e}")))?;
        if stored.magic != MODEL_MAGIC {
            return Err(Error::Model(format!(
                "bad magic `{}` (expected `{MODEL_MAGIC}`)",
                stored.magic
            )));
        }
        if stored.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model version {} (this build reads {MODEL_VERSION})",
                stored.version
            )));
        }
        Ok(PerceptronModel {
            labels: stored.labels,
            weights: stored.weights.into_iter().collect(),
            averaged: stored.averaged.into_iter().collect(),
            config: stored.config,
            beam: stored.beam,
            trained_epochs: stored.trained_epochs,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct StoredModel {
    magic: String,
    version: u32,
    beam: usize,
    trained_epochs: usize,
    labels: Vec<String>,
    config: FeatureConfig,
    weights: std::collections::BTreeMap<String, Vec<f64>>,
    averaged: std::collections::BTreeMap<String, Vec<f64>>,
}

/// Lazily-averaged weight table. The running mean is over the weight values
/// sampled after every step; `bump` must be called with non-decreasing step
/// numbers.
struct AveragedTable {
    n_labels: usize,
    entries: HashMap<String, Entry>,
}

struct Entry {
    w: Vec<f64>,
    total: Vec<f64>,
    stamp: Vec<u64>,
}

impl AveragedTable {
    fn new(n_labels: usize) -> Self {
        AveragedTable {
            n_labels,
            entries: HashMap::new(),
        }
    }

    fn row(&self, feature: &str) -> Option<&[f64]> {
        self.entries.get(feature).map(|e| e.w.as_slice())
    }

    fn bump(&mut self, feature: &str, label: usize, delta: f64, step: u64) {
        let entry = self
            .entries
            .entry(feature.to_string())
            .or_insert_with(|| Entry {
                w: vec![0.0; self.n_labels],
                total: vec![0.0; self.n_labels],
                stamp: vec![0; self.n_labels],
            });
        entry.total[label] += entry.w[label] * (step - entry.stamp[label]) as f64;
        entry.w[label] += delta;
        entry.stamp[label] = step;
    }

    /// Closes the trajectory after `steps` steps and returns the raw and
    /// averaged tables.
    fn finalize(self, steps: u64) -> (HashMap<String, Vec<f64>>, HashMap<String, Vec<f64>>) {
        let mut raw = HashMap::with_capacity(self.entries.len());
        let mut averaged = HashMap::with_capacity(self.entries.len());
        for (feature, entry) in self.entries {
            let avg: Vec<f64> = entry
                .w
                .iter()
                .zip(&entry.total)
                .zip(&entry.stamp)
                .map(|((&w, &total), &stamp)| {
                    (total + w * (steps + 1 - stamp) as f64) / steps as f64
                })
                .collect();
            averaged.insert(feature.clone(), avg);
            raw.insert(feature, entry.w);
        }
        (raw, averaged)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub epochs: usize,
    pub seed: u64,
    pub beam: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: DEFAULT_EPOCHS,
            seed: 1,
            beam: DEFAULT_BEAM,
        }
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: PerceptronModel,
    /// Number of sentence-level updates per epoch actually run.
    pub epoch_updates: Vec<usize>,
}

/// Trains a structured averaged perceptron. Gold labels are normalized to
/// the configured scheme first; the previous-prediction memory is built from
/// gold labels of the preceding sentences of each document (teacher
/// forcing). Sentence order is reshuffled every epoch from `seed`; training
/// stops early once an epoch makes no update.
pub fn train(corpus: &Corpus, config: FeatureConfig, opts: &TrainOptions) -> Result<TrainOutcome> {
    if opts.epochs == 0 {
        return Err(Error::invalid("epochs must be at least 1"));
    }
    config.validate()?;
    if corpus.sentence_count() == 0 {
        return Err(Error::invalid("cannot train on an empty corpus"));
    }

    // Normalize gold through the codec (repair + scheme conversion) and
    // freeze per-sentence feature vectors under gold teacher forcing.
    let source_scheme = detect_scheme(corpus);
    let mut sentences: Vec<&Sentence> = Vec::new();
    let mut gold_labels: Vec<Vec<String>> = Vec::new();
    let mut feature_vectors: Vec<Vec<Vec<String>>> = Vec::new();
    let mut types = std::collections::BTreeSet::new();
    for doc in &corpus.documents {
        let mut state = DecodeState::new();
        for sentence in &doc.sentences {
            let Some(gold) = &sentence.gold else {
                return Err(Error::invalid(format!(
                    "document {}: unlabeled sentence in training data",
                    doc.id
                )));
            };
            let gold = convert_scheme(gold, source_scheme, config.scheme);
            for span in decode_labels(&gold, config.scheme) {
                types.insert(span.etype);
            }
            let fvs: Vec<Vec<String>> = (0..sentence.len())
                .map(|i| extract(sentence, i, &state, &config))
                .collect();
            state.commit(sentence, &gold);
            sentences.push(sentence);
            gold_labels.push(gold);
            feature_vectors.push(fvs);
        }
    }

    let labels = expand_labels(&types.into_iter().collect::<Vec<_>>(), config.scheme);
    let kinds = label_kinds(&labels);
    let index: HashMap<&str, u16> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i as u16))
        .collect();
    let gold_ids: Vec<Vec<u16>> = gold_labels
        .iter()
        .map(|gold| gold.iter().map(|l| index[l.as_str()]).collect())
        .collect();

    let mut table = AveragedTable::new(labels.len());
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut epoch_updates = Vec::new();
    let mut step = 0u64;

    for _ in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut updates = 0usize;
        for &s in &order {
            step += 1;
            let fvs = &feature_vectors[s];
            let scores: Vec<Vec<f64>> = fvs
                .iter()
                .map(|fv| {
                    let mut row = vec![0.0; labels.len()];
                    for f in fv {
                        if let Some(weights) = table.row(f) {
                            for (acc, w) in row.iter_mut().zip(weights) {
                                *acc += w;
                            }
                        }
                    }
                    row
                })
                .collect();
            let pred = decode_from_scores(&scores, &kinds, config.scheme, opts.beam);
            let gold = &gold_ids[s];
            if pred != *gold {
                updates += 1;
                for (i, (&p, &g)) in pred.iter().zip(gold).enumerate() {
                    if p == g {
                        continue;
                    }
                    for f in &fvs[i] {
                        table.bump(f, g as usize, 1.0, step);
                        table.bump(f, p as usize, -1.0, step);
                    }
                }
            }
        }
        epoch_updates.push(updates);
        if updates == 0 {
            break;
        }
    }

    let (weights, averaged) = table.finalize(step);
    Ok(TrainOutcome {
        model: PerceptronModel {
            labels,
            weights,
            averaged,
            config,
            beam: opts.beam,
            trained_epochs: epoch_updates.len(),
        },
        epoch_updates,
    })
}
