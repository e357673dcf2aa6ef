//! CoNLL-style column corpora, tag-scheme codecs and corpus splits.
//!
//! The unit of decoding is the [`Sentence`]; the unit of prediction memory is
//! the [`Document`]. Spans are decoded from label sequences with the same
//! repair conventions the conlleval script applies, so the scorer and the
//! codec always agree on chunk boundaries.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A single token as read from a corpus file. Case is preserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    /// 0-based position within the sentence.
    pub index: usize,
}

/// A sentence: tokens plus an optional gold label sequence of equal length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub gold: Option<Vec<String>>,
}

impl Sentence {
    pub fn from_surfaces<S: AsRef<str>>(surfaces: &[S], gold: Option<Vec<String>>) -> Self {
        Sentence {
            tokens: surfaces
                .iter()
                .enumerate()
                .map(|(index, s)| Token {
                    surface: s.as_ref().to_string(),
                    index,
                })
                .collect(),
            gold,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surface(&self, i: usize) -> &str {
        &self.tokens[i].surface
    }
}

/// A document groups sentences; the previous-prediction memory is cleared at
/// document boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> {
        self.documents.iter().flat_map(|d| d.sentences.iter())
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn token_count(&self) -> usize {
        self.sentences().map(Sentence::len).sum()
    }

    /// Appends the documents of `other`, renumbering nothing.
    pub fn extend(&mut self, other: Corpus) {
        self.documents.extend(other.documents);
    }
}

/// An entity mention: token indices are inclusive on both ends.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub etype: String,
}

impl Span {
    pub fn new(start: usize, end: usize, etype: impl Into<String>) -> Self {
        Span {
            start,
            end,
            etype: etype.into(),
        }
    }
}

/// Positional tag scheme used to encode spans as per-token labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TagScheme {
    Bio,
    Bilou,
}

impl TagScheme {
    pub fn parse(s: &str) -> Result<TagScheme> {
        match s.to_ascii_uppercase().as_str() {
            "BIO" => Ok(TagScheme::Bio),
            "BILOU" => Ok(TagScheme::Bilou),
            other => Err(Error::invalid(format!(
                "unknown tag scheme `{other}` (expected BIO or BILOU)"
            ))),
        }
    }
}

impl fmt::Display for TagScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagScheme::Bio => write!(f, "BIO"),
            TagScheme::Bilou => write!(f, "BILOU"),
        }
    }
}

/// Emitted whenever decoding had to repair an invalid label transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairWarning {
    pub index: usize,
    pub label: String,
    pub msg: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
    Last(&'a str),
    Unit(&'a str),
}

fn parse_tag<'a>(label: &'a str, scheme: TagScheme) -> Option<Tag<'a>> {
    if label == "O" {
        return Some(Tag::Outside);
    }
    let (prefix, ty) = label.split_once('-')?;
    if ty.is_empty() {
        return None;
    }
    match (prefix, scheme) {
        ("B", _) => Some(Tag::Begin(ty)),
        ("I", _) => Some(Tag::Inside(ty)),
        ("L", TagScheme::Bilou) => Some(Tag::Last(ty)),
        ("U", TagScheme::Bilou) => Some(Tag::Unit(ty)),
        _ => None,
    }
}

/// Decodes a label sequence into spans. Total on all inputs: invalid
/// transitions are repaired following conlleval (an `I-X` not preceded by
/// `B-X`/`I-X` opens a new chunk; in BILOU, stray `L-`/`U-` close or form
/// unit chunks), and labels with an unknown prefix are treated as `O`.
pub fn decode_labels(labels: &[String], scheme: TagScheme) -> Vec<Span> {
    decode_labels_verbose(labels, scheme).0
}

/// As [`decode_labels`], additionally reporting every applied repair.
pub fn decode_labels_verbose(
    labels: &[String],
    scheme: TagScheme,
) -> (Vec<Span>, Vec<RepairWarning>) {
    let mut spans = Vec::new();
    let mut warnings = Vec::new();
    // (start index, type) of the currently open chunk
    let mut open: Option<(usize, String)> = None;
    let mut warn = |index: usize, label: &str, msg: &str| {
        warnings.push(RepairWarning {
            index,
            label: label.to_string(),
            msg: msg.to_string(),
        });
    };

    for (i, label) in labels.iter().enumerate() {
        let tag = match parse_tag(label, scheme) {
            Some(tag) => tag,
            None => {
                warn(i, label, "unknown label prefix, treated as O");
                Tag::Outside
            }
        };
        match tag {
            Tag::Outside => {
                if let Some((start, ty)) = open.take() {
                    if scheme == TagScheme::Bilou {
                        warn(i, label, "open chunk not closed by L-, ended before O");
                    }
                    spans.push(Span::new(start, i - 1, ty));
                }
            }
            Tag::Begin(ty) => {
                if let Some((start, prev_ty)) = open.take() {
                    if scheme == TagScheme::Bilou {
                        warn(i, label, "open chunk not closed by L-, ended before B-");
                    }
                    spans.push(Span::new(start, i - 1, prev_ty));
                }
                open = Some((i, ty.to_string()));
            }
            Tag::Inside(ty) => match &open {
                Some((_, prev_ty)) if prev_ty == ty => {}
                Some(_) => {
                    warn(i, label, "I- type mismatch opens a new chunk");
                    let (start, prev_ty) = open.take().unwrap();
                    spans.push(Span::new(start, i - 1, prev_ty));
                    open = Some((i, ty.to_string()));
                }
                None => {
                    warn(i, label, "I- without open chunk opens a new chunk");
                    open = Some((i, ty.to_string()));
                }
            },
            Tag::Last(ty) => match open.take() {
                Some((start, prev_ty)) if prev_ty == ty => {
                    spans.push(Span::new(start, i, prev_ty));
                }
                Some((start, prev_ty)) => {
                    warn(i, label, "L- type mismatch forms a unit chunk");
                    spans.push(Span::new(start, i - 1, prev_ty));
                    spans.push(Span::new(i, i, ty.to_string()));
                }
                None => {
                    warn(i, label, "stray L- forms a unit chunk");
                    spans.push(Span::new(i, i, ty.to_string()));
                }
            },
            Tag::Unit(ty) => {
                if let Some((start, prev_ty)) = open.take() {
                    warn(i, label, "open chunk not closed by L-, ended before U-");
                    spans.push(Span::new(start, i - 1, prev_ty));
                }
                spans.push(Span::new(i, i, ty.to_string()));
            }
        }
    }
    if let Some((start, ty)) = open {
        if scheme == TagScheme::Bilou {
            warn(
                labels.len().saturating_sub(1),
                labels.last().map(String::as_str).unwrap_or(""),
                "open chunk at end of sentence",
            );
        }
        spans.push(Span::new(start, labels.len() - 1, ty));
    }
    (spans, warnings)
}

/// Encodes a span set as a label sequence of length `len`.
pub fn encode_spans(spans: &[Span], len: usize, scheme: TagScheme) -> Result<Vec<String>> {
    let mut sorted: Vec<&Span> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    let mut labels = vec!["O".to_string(); len];
    let mut prev_end: Option<usize> = None;
    for span in sorted {
        if span.start > span.end || span.end >= len {
            return Err(Error::invalid(format!(
                "span ({},{},{}) out of range for length {len}",
                span.start, span.end, span.etype
            )));
        }
        if let Some(pe) = prev_end {
            if span.start <= pe {
                return Err(Error::invalid(format!(
                    "overlapping spans at token {}",
                    span.start
                )));
            }
        }
        prev_end = Some(span.end);
        let ty = &span.etype;
        match scheme {
            TagScheme::Bio => {
                labels[span.start] = format!("B-{ty}");
                for slot in labels.iter_mut().take(span.end + 1).skip(span.start + 1) {
                    *slot = format!("I-{ty}");
                }
            }
            TagScheme::Bilou => {
                if span.start == span.end {
                    labels[span.start] = format!("U-{ty}");
                } else {
                    labels[span.start] = format!("B-{ty}");
                    for slot in labels.iter_mut().take(span.end).skip(span.start + 1) {
                        *slot = format!("I-{ty}");
                    }
                    labels[span.end] = format!("L-{ty}");
                }
            }
        }
    }
    Ok(labels)
}

/// Re-encodes a label sequence from one scheme into another, going through
/// span decoding (and therefore through repair). Span-preserving and total.
pub fn convert_scheme(labels: &[String], from: TagScheme, to: TagScheme) -> Vec<String> {
    let spans = decode_labels(labels, from);
    encode_spans(&spans, labels.len(), to).expect("decoded spans are always valid")
}

/// Guesses the scheme of a labeled corpus: any `L-`/`U-` label means BILOU.
pub fn detect_scheme(corpus: &Corpus) -> TagScheme {
    for sentence in corpus.sentences() {
        if let Some(gold) = &sentence.gold {
            for label in gold {
                if label.starts_with("L-") || label.starts_with("U-") {
                    return TagScheme::Bilou;
                }
            }
        }
    }
    TagScheme::Bio
}

const DOCSTART: &str = "-DOCSTART-";

/// Reads a CoNLL column file: one token per line, whitespace-separated
/// columns, blank line between sentences, `-DOCSTART-` line between
/// documents. The token is column 0; the label is `label_column` when given,
/// otherwise the last column (or absent when lines carry a single column).
pub fn read_conll(path: impl AsRef<Path>, label_column: Option<usize>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    read_conll_from(
        BufReader::new(file),
        &path.display().to_string(),
        label_column,
    )
}

/// As [`read_conll`], from any reader. `name` is used in error messages.
pub fn read_conll_from(
    reader: impl BufRead,
    name: &str,
    label_column: Option<usize>,
) -> Result<Corpus> {
    let mut documents: Vec<Document> = Vec::new();
    let mut sentences: Vec<Sentence> = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut labeled: Option<bool> = None;

    fn flush_sentence(
        tokens: &mut Vec<Token>,
        labels: &mut Vec<String>,
        labeled: &mut Option<bool>,
        sentences: &mut Vec<Sentence>,
    ) {
        if tokens.is_empty() {
            return;
        }
        let gold = if *labeled == Some(true) {
            Some(std::mem::take(labels))
        } else {
            labels.clear();
            None
        };
        sentences.push(Sentence {
            tokens: std::mem::take(tokens),
            gold,
        });
        *labeled = None;
    }

    fn flush_document(sentences: &mut Vec<Sentence>, documents: &mut Vec<Document>) {
        if sentences.is_empty() {
            return;
        }
        documents.push(Document {
            id: format!("doc{}", documents.len()),
            sentences: std::mem::take(sentences),
        });
    }

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            flush_sentence(&mut tokens, &mut labels, &mut labeled, &mut sentences);
            continue;
        }
        if fields[0] == DOCSTART {
            flush_sentence(&mut tokens, &mut labels, &mut labeled, &mut sentences);
            flush_document(&mut sentences, &mut documents);
            continue;
        }
        let label = match label_column {
            Some(col) => match fields.get(col) {
                Some(f) => Some(f.to_string()),
                None => {
                    return Err(Error::parse(
                        name,
                        lineno,
                        format!(
                            "expected at least {} fields, found {}",
                            col + 1,
                            fields.len()
                        ),
                    ))
                }
            },
            None if fields.len() >= 2 => Some(fields[fields.len() - 1].to_string()),
            None => None,
        };
        let has_label = label.is_some();
        match labeled {
            None => labeled = Some(has_label),
            Some(expected) if expected != has_label => {
                return Err(Error::parse(
                    name,
                    lineno,
                    "inconsistent column count within sentence",
                ))
            }
            _ => {}
        }
        tokens.push(Token {
            surface: fields[0].to_string(),
            index: tokens.len(),
        });
        if let Some(label) = label {
            labels.push(label);
        }
    }
    flush_sentence(&mut tokens, &mut labels, &mut labeled, &mut sentences);
    flush_document(&mut sentences, &mut documents);
    Ok(Corpus { documents })
}

/// Writes a corpus in the two-column CoNLL form read by [`read_conll`].
pub fn write_conll(corpus: &Corpus, mut writer: impl Write) -> Result<()> {
    for doc in &corpus.documents {
        writeln!(writer, "{DOCSTART} O")?;
        writeln!(writer)?;
        for sentence in &doc.sentences {
            for (i, token) in sentence.tokens.iter().enumerate() {
                match &sentence.gold {
                    Some(gold) => writeln!(writer, "{} {}", token.surface, gold[i])?,
                    None => writeln!(writer, "{}", token.surface)?,
                }
            }
            writeln!(writer)?;
        }
    }
    Ok(())
}

pub fn write_conll_file(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_conll(corpus, std::io::BufWriter::new(file))
}

/// Returns the contiguous sentence prefix whose token count is the largest
/// not exceeding `fraction` of the total, with at least one sentence.
pub fn split_fraction(corpus: &Corpus, fraction: f64) -> Result<Corpus> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "fraction must be in (0,1], got {fraction}"
        )));
    }
    if corpus.sentence_count() == 0 {
        return Err(Error::invalid("cannot split an empty corpus"));
    }
    let target = fraction * corpus.token_count() as f64;
    let mut taken = 0usize;
    let mut kept = 0f64;
    let mut documents = Vec::new();
    'outer: for doc in &corpus.documents {
        let mut sentences = Vec::new();
        for sentence in &doc.sentences {
            let next = kept + sentence.len() as f64;
            if next > target && taken > 0 {
                if !sentences.is_empty() {
                    documents.push(Document {
                        id: doc.id.clone(),
                        sentences,
                    });
                }
                break 'outer;
            }
            kept = next;
            taken += 1;
            sentences.push(sentence.clone());
            if next > target {
                // zero-token budget: keep exactly one sentence
                if !sentences.is_empty() {
                    documents.push(Document {
                        id: doc.id.clone(),
                        sentences,
                    });
                }
                break 'outer;
            }
        }
        if !sentences.is_empty() {
            documents.push(Document {
                id: doc.id.clone(),
                sentences,
            });
        }
    }
    Ok(Corpus { documents })
}

/// Splits the corpus into `k` seed-deterministic (train, test) fold pairs.
/// Folds partition the sentences; consecutive sentences from the same source
/// document stay grouped under that document's id.
pub fn kfold(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<(Corpus, Corpus)>> {
    let flat: Vec<(usize, &Sentence)> = corpus
        .documents
        .iter()
        .enumerate()
        .flat_map(|(d, doc)| doc.sentences.iter().map(move |s| (d, s)))
        .collect();
    let n = flat.len();
    if k < 2 || k > n {
        return Err(Error::invalid(format!(
            "k must satisfy 2 <= k <= {n}, got {k}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut fold_of = vec![0usize; n];
    for fold in 0..k {
        let from = fold * n / k;
        let to = (fold + 1) * n / k;
        for &idx in &order[from..to] {
            fold_of[idx] = fold;
        }
    }

    let rebuild = |keep: &dyn Fn(usize) -> bool| -> Corpus {
        let mut documents: Vec<Document> = Vec::new();
        for (i, &(d, sentence)) in flat.iter().enumerate() {
            if !keep(i) {
                continue;
            }
            let id = &corpus.documents[d].id;
            match documents.last_mut() {
                Some(last) if last.id == *id => last.sentences.push(sentence.clone()),
                _ => documents.push(Document {
                    id: id.clone(),
                    sentences: vec![sentence.clone()],
                }),
            }
        }
        Corpus { documents }
    };

    Ok((0..k)
        .map(|fold| {
            let train = rebuild(&|i| fold_of[i] != fold);
            let test = rebuild(&|i| fold_of[i] == fold);
            (train, test)
        })
        .collect())
}

/// Aggregate counts over a corpus; entity counts are computed through
/// [`decode_labels`] so they match the scorer's chunking.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusStats {
    pub tokens: usize,
    pub sentences: usize,
    pub documents: usize,
    pub entities: BTreeMap<String, usize>,
}

impl CorpusStats {
    pub fn total_entities(&self) -> usize {
        self.entities.values().sum()
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "documents={} sentences={} tokens={} entities={}",
            self.documents,
            self.sentences,
            self.tokens,
            self.total_entities()
        )?;
        for (ty, count) in &self.entities {
            writeln!(f, "  {ty}: {count}")?;
        }
        Ok(())
    }
}

pub fn corpus_stats(corpus: &Corpus, scheme: TagScheme) -> CorpusStats {
    let mut stats = CorpusStats {
        documents: corpus.documents.len(),
        ..Default::default()
    };
    for sentence in corpus.sentences() {
        stats.sentences += 1;
        stats.tokens += sentence.len();
        if let Some(gold) = &sentence.gold {
            for span in decode_labels(gold, scheme) {
                *stats.entities.entry(span.etype).or_insert(0) += 1;
            }
        }
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::io::Cursor;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn decode_bio_basic() {
        let spans = decode_labels(&labels(&["B-PER", "I-PER", "O"]), TagScheme::Bio);
        assert_eq!(spans, vec![Span::new(0, 1, "PER")]);
    }

    #[test]
    fn decode_bio_orphan_inside_opens_chunk() {
        let (spans, warnings) =
            decode_labels_verbose(&labels(&["O", "I-PER", "I-PER"]), TagScheme::Bio);
        assert_eq!(spans, vec![Span::new(1, 2, "PER")]);
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].index, 1);
    }

    #[test]
    fn decode_bilou_units() {
        let spans = decode_labels(&labels(&["U-LOC", "B-ORG", "L-ORG"]), TagScheme::Bilou);
        assert_eq!(spans, vec![Span::new(0, 0, "LOC"), Span::new(1, 2, "ORG")]);
    }

    #[test]
    fn decode_bilou_stray_last_forms_unit() {
        let (spans, warnings) = decode_labels_verbose(&labels(&["O", "L-PER"]), TagScheme::Bilou);
        assert_eq!(spans, vec![Span::new(1, 1, "PER")]);
        assert!(!warnings.is_empty());
    }

    #[test]
    fn decode_bilou_open_chunk_at_end() {
        let (spans, warnings) =
            decode_labels_verbose(&labels(&["B-ORG", "I-ORG"]), TagScheme::Bilou);
        assert_eq!(spans, vec![Span::new(0, 1, "ORG")]);
        assert!(!warnings.is_empty());
    }

    #[test]
    fn decode_unknown_prefix_is_outside() {
        let (spans, warnings) = decode_labels_verbose(&labels(&["X-FOO", "B-PER"]), TagScheme::Bio);
        assert_eq!(spans, vec![Span::new(1, 1, "PER")]);
        assert_eq!(warnings[0].index, 0);
        // L-/U- are outside the BIO alphabet
        let (spans, warnings) = decode_labels_verbose(&labels(&["U-LOC"]), TagScheme::Bio);
        assert!(spans.is_empty());
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(
            encode_spans(&[Span::new(0, 0, "LOC")], 2, TagScheme::Bilou).unwrap(),
            labels(&["U-LOC", "O"])
        );
        assert_eq!(
            encode_spans(&[Span::new(0, 2, "ORG")], 3, TagScheme::Bilou).unwrap(),
            labels(&["B-ORG", "I-ORG", "L-ORG"])
        );
        assert_eq!(
            encode_spans(&[], 3, TagScheme::Bio).unwrap(),
            labels(&["O", "O", "O"])
        );
    }

    #[test]
    fn encode_rejects_overlap_and_range() {
        assert!(encode_spans(
            &[Span::new(0, 1, "LOC"), Span::new(1, 2, "ORG")],
            3,
            TagScheme::Bio
        )
        .is_err());
        assert!(encode_spans(&[Span::new(1, 3, "LOC")], 3, TagScheme::Bio).is_err());
    }

    #[test]
    fn convert_examples() {
        assert_eq!(
            convert_scheme(
                &labels(&["B-ORG", "I-ORG", "I-ORG"]),
                TagScheme::Bio,
                TagScheme::Bilou
            ),
            labels(&["B-ORG", "I-ORG", "L-ORG"])
        );
        assert_eq!(
            convert_scheme(&labels(&["U-LOC"]), TagScheme::Bilou, TagScheme::Bio),
            labels(&["B-LOC"])
        );
        assert_eq!(
            convert_scheme(&labels(&["O"]), TagScheme::Bio, TagScheme::Bio),
            labels(&["O"])
        );
    }

    #[test]
    fn read_minimal_conll() {
        let corpus = read_conll_from(Cursor::new("John B-PER\nran O\n\n"), "test", None).unwrap();
        assert_eq!(corpus.documents.len(), 1);
        assert_eq!(corpus.sentence_count(), 1);
        let s = corpus.sentences().next().unwrap();
        assert_eq!(s.surface(0), "John");
        assert_eq!(s.surface(1), "ran");
        assert_eq!(s.gold, Some(labels(&["B-PER", "O"])));
    }

    #[test]
    fn read_docstart_only_is_empty() {
        let corpus = read_conll_from(
            Cursor::new("-DOCSTART- O\n\n-DOCSTART- O\n\n"),
            "test",
            None,
        )
        .unwrap();
        assert_eq!(corpus.sentence_count(), 0);
        assert!(corpus.documents.is_empty());
    }

    #[test]
    fn read_empty_file() {
        let corpus = read_conll_from(Cursor::new(""), "test", None).unwrap();
        assert!(corpus.documents.is_empty());
    }

    #[test]
    fn read_label_column_out_of_range() {
        let err = read_conll_from(Cursor::new("John B-PER\n"), "test", Some(3)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("test:1"), "{msg}");
    }

    #[test]
    fn read_explicit_label_column() {
        let corpus = read_conll_from(
            Cursor::new("John NNP B-PER extra\nran VBD O extra\n\n"),
            "test",
            Some(2),
        )
        .unwrap();
        let s = corpus.sentences().next().unwrap();
        assert_eq!(s.gold, Some(labels(&["B-PER", "O"])));
    }

    #[test]
    fn write_read_roundtrip() {
        let text = "a B-LOC\nb O\n\nc O\n\n-DOCSTART- O\n\nd U-PER\n\n";
        let corpus = read_conll_from(Cursor::new(text), "test", None).unwrap();
        let mut out = Vec::new();
        write_conll(&corpus, &mut out).unwrap();
        let reread = read_conll_from(Cursor::new(out), "test", None).unwrap();
        assert_eq!(corpus, reread);
    }

    fn one_token_sentences(n: usize) -> Corpus {
        let sentences = (0..n)
            .map(|i| Sentence::from_surfaces(&[format!("w{i}")], Some(labels(&["O"]))))
            .collect();
        Corpus {
            documents: vec![Document {
                id: "doc0".into(),
                sentences,
            }],
        }
    }

    #[test]
    fn split_fraction_full_is_identity() {
        let corpus = one_token_sentences(4);
        assert_eq!(split_fraction(&corpus, 1.0).unwrap(), corpus);
    }

    #[test]
    fn split_fraction_half_of_four() {
        let corpus = one_token_sentences(4);
        let half = split_fraction(&corpus, 0.5).unwrap();
        assert_eq!(half.sentence_count(), 2);
        assert_eq!(half.sentences().next().unwrap().surface(0), "w0");
    }

    #[test]
    fn split_fraction_keeps_at_least_one_sentence() {
        let corpus = one_token_sentences(4);
        let tiny = split_fraction(&corpus, 0.01).unwrap();
        assert_eq!(tiny.sentence_count(), 1);
    }

    #[test]
    fn split_fraction_monotone_in_fraction() {
        let corpus = one_token_sentences(13);
        let mut prev = 0;
        for i in 1..=10 {
            let f = i as f64 / 10.0;
            let n = split_fraction(&corpus, f).unwrap().token_count();
            assert!(n >= prev);
            prev = n;
        }
        assert_eq!(prev, 13);
    }

    #[test]
    fn split_fraction_rejects_empty_and_bad_fraction() {
        assert!(split_fraction(&Corpus::default(), 0.5).is_err());
        assert!(split_fraction(&one_token_sentences(2), 0.0).is_err());
        assert!(split_fraction(&one_token_sentences(2), 1.5).is_err());
    }

    #[test]
    fn split_fraction_stays_within_one_sentence_of_the_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let sentences: Vec<Sentence> = (0..rng.gen_range(1..60))
                .map(|i| {
                    let n = rng.gen_range(1..25);
                    let words: Vec<String> = (0..n).map(|j| format!("s{i}w{j}")).collect();
                    Sentence::from_surfaces(&words, None)
                })
                .collect();
            let longest = sentences.iter().map(Sentence::len).max().unwrap();
            let corpus = Corpus {
                documents: vec![Document {
                    id: "doc0".into(),
                    sentences,
                }],
            };
            let total = corpus.token_count() as f64;
            for denominator in [16.0, 8.0, 4.0, 2.0, 1.0] {
                let fraction = 1.0 / denominator;
                let kept = split_fraction(&corpus, fraction).unwrap().token_count();
                let target = fraction * total;
                assert!(
                    kept as f64 <= target || kept <= longest,
                    "kept {kept} exceeds target {target}"
                );
                assert!(
                    target - kept as f64 <= longest as f64,
                    "kept {kept} misses target {target} by more than one sentence"
                );
            }
        }
    }

    #[test]
    fn kfold_balanced_and_deterministic() {
        let corpus = one_token_sentences(10);
        let folds = kfold(&corpus, 2, 7).unwrap();
        assert_eq!(folds.len(), 2);
        for (train, test) in &folds {
            assert_eq!(test.sentence_count(), 5);
            assert_eq!(train.sentence_count(), 5);
        }
        assert_eq!(folds, kfold(&corpus, 2, 7).unwrap());
        assert_ne!(folds, kfold(&corpus, 2, 8).unwrap());
    }

    #[test]
    fn kfold_test_folds_cover_corpus() {
        let corpus = one_token_sentences(11);
        let folds = kfold(&corpus, 3, 1).unwrap();
        let mut seen: Vec<String> = folds
            .iter()
            .flat_map(|(_, test)| test.sentences().map(|s| s.surface(0).to_string()))
            .collect();
        seen.sort();
        let mut expect: Vec<String> = (0..11).map(|i| format!("w{i}")).collect();
        expect.sort();
        assert_eq!(seen, expect);
    }

    #[test]
    fn kfold_rejects_large_k() {
        assert!(kfold(&one_token_sentences(3), 4, 0).is_err());
        assert!(kfold(&one_token_sentences(3), 1, 0).is_err());
    }

    #[test]
    fn stats_counts_entities() {
        let corpus = Corpus {
            documents: vec![Document {
                id: "doc0".into(),
                sentences: vec![Sentence::from_surfaces(&["John"], Some(labels(&["B-PER"])))],
            }],
        };
        let stats = corpus_stats(&corpus, TagScheme::Bio);
        assert_eq!(stats.tokens, 1);
        assert_eq!(stats.entities.get("PER"), Some(&1));
        assert_eq!(corpus_stats(&Corpus::default(), TagScheme::Bio).tokens, 0);
    }

    // Random valid span sets for the property tests.
    fn arb_spans(len: usize) -> impl Strategy<Value = Vec<Span>> {
        proptest::collection::vec((0..len, 0..len, 0..3usize), 0..4).prop_map(move |raw| {
            let mut spans: Vec<Span> = Vec::new();
            let mut next_free = 0usize;
            let types = ["PER", "LOC", "ORG"];
            for (a, b, t) in raw {
                let start = a.min(b).max(next_free);
                let end = a.max(b);
                if start > end || end >= len {
                    continue;
                }
                spans.push(Span::new(start, end, types[t]));
                next_free = end + 1;
            }
            spans
        })
    }

    proptest! {
        #[test]
        fn roundtrip_bio(spans in arb_spans(8)) {
            let enc = encode_spans(&spans, 8, TagScheme::Bio).unwrap();
            prop_assert_eq!(decode_labels(&enc, TagScheme::Bio), spans);
        }

        #[test]
        fn roundtrip_bilou(spans in arb_spans(8)) {
            let enc = encode_spans(&spans, 8, TagScheme::Bilou).unwrap();
            let (decoded, warnings) = decode_labels_verbose(&enc, TagScheme::Bilou);
            prop_assert_eq!(decoded, spans);
            prop_assert!(warnings.is_empty());
        }

        #[test]
        fn conversion_preserves_spans(spans in arb_spans(8)) {
            let bio = encode_spans(&spans, 8, TagScheme::Bio).unwrap();
            let bilou = convert_scheme(&bio, TagScheme::Bio, TagScheme::Bilou);
            prop_assert_eq!(decode_labels(&bilou, TagScheme::Bilou), spans);
        }

        #[test]
        fn repair_total_and_idempotent(raw in proptest::collection::vec(
            proptest::sample::select(vec![
                "O", "B-PER", "I-PER", "L-PER", "U-PER", "B-LOC", "I-LOC", "L-LOC", "U-LOC", "J-X",
            ]),
            0..10,
        )) {
            let seq: Vec<String> = raw.iter().map(|s| s.to_string()).collect();
            for scheme in [TagScheme::Bio, TagScheme::Bilou] {
                let spans = decode_labels(&seq, scheme);
                let enc = encode_spans(&spans, seq.len(), scheme).unwrap();
                prop_assert_eq!(decode_labels(&enc, scheme), spans);
            }
        }
    }
}
