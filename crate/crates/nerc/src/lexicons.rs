//! The four external knowledge sources: Brown path lexicons, flat cluster
//! lexicons (Clark or Word2vec classes), gazetteers and embedding tables.
//!
//! Case policy mirrors each inducing tool's preprocessing: Brown lookups are
//! case-sensitive, flat-cluster and embedding lookups are lowercased.
//! Absent-word behavior is owned by the feature layer, not here.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_BROWN_PREFIX_LENGTHS: [usize; 4] = [4, 6, 10, 20];

/// Word-to-bitpath lexicon produced by Brown clustering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BrownLexicon {
    /// word (case preserved) -> (bit path, corpus count)
    pub entries: BTreeMap<String, (String, u64)>,
    /// Path truncation lengths, strictly increasing.
    pub prefix_lengths: Vec<usize>,
    /// Feature namespace; `bt` unless several Brown lexicons are stacked.
    pub namespace: String,
}

impl BrownLexicon {
    pub fn new(namespace: impl Into<String>) -> Self {
        BrownLexicon {
            entries: BTreeMap::new(),
            prefix_lengths: DEFAULT_BROWN_PREFIX_LENGTHS.to_vec(),
            namespace: namespace.into(),
        }
    }

    /// Existing path prefixes for `word`: every configured truncation length
    /// that the path reaches, or the full path alone when it is shorter than
    /// the smallest requested length. Absent words yield nothing.
    pub fn prefixes(&self, word: &str) -> Vec<String> {
        let Some((path, _)) = self.entries.get(word) else {
            return Vec::new();
        };
        let mut out: Vec<String> = self
            .prefix_lengths
            .iter()
            .filter(|&&len| len <= path.len())
            .map(|&len| path[..len].to_string())
            .collect();
        if out.is_empty() {
            out.push(path.clone());
        }
        out
    }
}

/// Flat word-to-class lexicon (Clark clusters, Word2vec K-means classes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatClusterLexicon {
    /// word (lowercased) -> class id
    pub entries: BTreeMap<String, String>,
    /// Feature namespace, e.g. `ca`, `cb`, `w2va`, `w2vb`.
    pub namespace: String,
    /// Declared class count.
    pub k: usize,
}

impl FlatClusterLexicon {
    pub fn new(namespace: impl Into<String>, k: usize) -> Self {
        FlatClusterLexicon {
            entries: BTreeMap::new(),
            namespace: namespace.into(),
            k,
        }
    }

    pub fn class_of(&self, word: &str) -> Option<&str> {
        self.entries.get(&word.to_lowercase()).map(String::as_str)
    }
}

/// All gazetteers collapsed into one dictionary: multi-token key (lowercased,
/// space-joined) to the set of entity types it was listed under.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gazetteer {
    pub entries: BTreeMap<String, BTreeSet<String>>,
}

impl Gazetteer {
    pub fn lookup(&self, key: &str) -> Option<&BTreeSet<String>> {
        self.entries.get(key)
    }

    /// Longest entry, in tokens.
    pub fn max_key_tokens(&self) -> usize {
        self.entries
            .keys()
            .map(|k| k.split(' ').count())
            .max()
            .unwrap_or(0)
    }
}

/// Word embedding table in word2vec text convention.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    /// Kept in file order so downstream clustering is reproducible.
    pub words: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
    index: std::collections::HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            words: Vec::new(),
            vectors: Vec::new(),
            index: std::collections::HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn push(&mut self, word: String, vector: Vec<f64>) {
        debug_assert_eq!(vector.len(), self.dim);
        match self.index.get(&word) {
            Some(&i) => self.vectors[i] = vector,
            None => {
                self.index.insert(word.clone(), self.words.len());
                self.words.push(word);
                self.vectors.push(vector);
            }
        }
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(&word.to_lowercase())
            .map(|&i| self.vectors[i].as_slice())
    }
}

/// Loads a Brown lexicon in `bitpath<TAB>word<TAB>count` format. Duplicate
/// words keep the higher-count entry.
pub fn load_brown(path: impl AsRef<Path>, namespace: &str) -> Result<BrownLexicon> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    load_brown_from(BufReader::new(file), &path.display().to_string(), namespace)
}

pub fn load_brown_from(reader: impl BufRead, name: &str, namespace: &str) -> Result<BrownLexicon> {
    let mut lex = BrownLexicon::new(namespace);
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                name,
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let bits = fields[0];
        if bits.is_empty() || !bits.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::parse(
                name,
                lineno,
                format!("path `{bits}` is not a binary string"),
            ));
        }
        let count: u64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(name, lineno, format!("bad count `{}`", fields[2])))?;
        let word = fields[1].to_string();
        match lex.entries.get(&word) {
            Some((_, existing)) if *existing >= count => {}
            _ => {
                lex.entries.insert(word, (bits.to_string(), count));
            }
        }
    }
    Ok(lex)
}

/// Loads a flat cluster lexicon in `word<whitespace>classid` format. Words
/// are lowercased; the last occurrence of a word wins.
pub fn load_flat(path: impl AsRef<Path>, namespace: &str) -> Result<FlatClusterLexicon> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    load_flat_from(BufReader::new(file), &path.display().to_string(), namespace)
}

pub fn load_flat_from(
    reader: impl BufRead,
    name: &str,
    namespace: &str,
) -> Result<FlatClusterLexicon> {
    let mut entries = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                name,
                lineno,
                format!("expected 2 fields, found {}", fields.len()),
            ));
        }
        entries.insert(fields[0].to_lowercase(), fields[1].to_string());
    }
    let k = entries
        .values()
        .collect::<std::collections::HashSet<_>>()
        .len();
    Ok(FlatClusterLexicon {
        entries,
        namespace: namespace.to_string(),
        k,
    })
}

/// Loads and collapses any number of gazetteer files into one dictionary.
/// Each line is `entry<TAB>TYPE`; entries may contain spaces and are
/// lowercased; types accumulate as a set.
pub fn load_gazetteers<P: AsRef<Path>>(paths: &[P]) -> Result<Gazetteer> {
    let mut gaz = Gazetteer::default();
    for path in paths {
        let path = path.as_ref();
        let file = File::open(path)
            .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
        load_gazetteer_into(&mut gaz, BufReader::new(file), &path.display().to_string())?;
    }
    Ok(gaz)
}

pub fn load_gazetteer_into(gaz: &mut Gazetteer, reader: impl BufRead, name: &str) -> Result<()> {
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((entry, ty)) = line.split_once('\t') else {
            return Err(Error::parse(name, lineno, "missing TYPE field"));
        };
        let entry = entry.trim().to_lowercase();
        let ty = ty.trim();
        if entry.is_empty() || ty.is_empty() {
            return Err(Error::parse(name, lineno, "empty entry or TYPE field"));
        }
        let key = entry.split_whitespace().collect::<Vec<_>>().join(" ");
        gaz.entries.entry(key).or_default().insert(ty.to_string());
    }
    Ok(())
}

/// Loads an embedding table in word2vec text convention: a `V d` header
/// line, then one `word v1 .. vd` row per word. Words are lowercased.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    load_embeddings_from(BufReader::new(file), &path.display().to_string())
}

pub fn load_embeddings_from(reader: impl BufRead, name: &str) -> Result<EmbeddingTable> {
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(name, 1, "missing header line"))?;
    let header = header?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(Error::parse(name, 1, "header must be `V d`"));
    }
    let dim: usize = head[1]
        .parse()
        .map_err(|_| Error::parse(name, 1, "bad dimension in header"))?;
    if dim == 0 {
        return Err(Error::parse(name, 1, "dimension must be positive"));
    }
    let mut table = EmbeddingTable::new(dim);
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().unwrap().to_lowercase();
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::parse(name, lineno, format!("bad float `{f}`")))
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                name,
                lineno,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        table.push(word, values);
    }
    Ok(table)
}

/// Writes a Brown lexicon in the format read by [`load_brown`].
pub fn write_brown(lex: &BrownLexicon, mut writer: impl Write) -> Result<()> {
    let mut rows: Vec<(&String, &(String, u64))> = lex.entries.iter().collect();
    rows.sort_by(|a, b| (&a.1 .0, a.0).cmp(&(&b.1 .0, b.0)));
    for (word, (path, count)) in rows {
        writeln!(writer, "{path}\t{word}\t{count}")?;
    }
    Ok(())
}

/// Writes a flat cluster lexicon in the format read by [`load_flat`].
pub fn write_flat(lex: &FlatClusterLexicon, mut writer: impl Write) -> Result<()> {
    for (word, class) in &lex.entries {
        writeln!(writer, "{word} {class}")?;
    }
    Ok(())
}
