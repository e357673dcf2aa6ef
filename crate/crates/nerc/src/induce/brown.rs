//! Brown clustering: agglomerative class-based bigram clustering that
//! greedily merges the pair of clusters whose merge loses the least average
//! mutual information.
//!
//! This is the frequency-windowed variant: the C most frequent words seed
//! singleton clusters, every further word is inserted as cluster C+1 and the
//! cheapest pair among the C+1 active clusters is merged. Words not yet
//! inserted count as frozen singleton clusters, so bigram totals stay fixed
//! throughout. Once all words are in, the remaining C clusters are merged
//! down to one; those last C-1 merges form the binary hierarchy whose bit
//! paths become the lexicon entries.

use std::collections::{BTreeSet, HashMap};

use crate::lexicons::BrownLexicon;
use crate::{Error, Result};

use super::TokenStream;

/// Snapshot handed to an observer before each merge, sufficient to recompute
/// every candidate loss from scratch.
#[derive(Debug, Clone)]
pub struct MergeStep {
    /// Active (mergeable) clusters, slot order, members sorted.
    pub active: Vec<Vec<String>>,
    /// Words still frozen in their own singleton clusters.
    pub frozen: Vec<String>,
    /// Indices into `active` of the pair about to be merged.
    pub merged: (usize, usize),
}

pub fn induce_brown(stream: &TokenStream, classes: usize, min_count: u64) -> Result<BrownLexicon> {
    induce_brown_observed(stream, classes, min_count, |_| {})
}

pub fn induce_brown_observed(
    stream: &TokenStream,
    classes: usize,
    min_count: u64,
    mut observer: impl FnMut(&MergeStep),
) -> Result<BrownLexicon> {
    if classes < 2 {
        return Err(Error::invalid("need at least 2 classes"));
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for sentence in &stream.sentences {
        for word in sentence {
            *counts.entry(word).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = counts
        .iter()
        .filter(|(_, &c)| c >= min_count)
        .map(|(&w, &c)| (w, c))
        .collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    if vocab.len() < classes {
        return Err(Error::invalid(format!(
            "vocabulary after min_count filtering has {} words, need at least {classes}",
            vocab.len()
        )));
    }

    let mut tables = Tables::new(vocab.iter().map(|&(w, c)| (w.to_string(), c)).collect());
    // Bigrams over adjacent kept words; filtered words close the gap.
    for sentence in &stream.sentences {
        let ids: Vec<u32> = sentence
            .iter()
            .filter_map(|w| tables.word_id.get(w.as_str()).copied())
            .collect();
        for pair in ids.windows(2) {
            tables.add_bigram(pair[0], pair[1]);
        }
    }

    // Insertion phase: activate the C most frequent words, then one word at
    // a time, merging the cheapest pair after each activation.
    for slot in 0..classes as u32 {
        tables.active.insert(slot);
    }
    for slot in classes as u32..tables.words.len() as u32 {
        tables.active.insert(slot);
        let (a, b) = tables.best_pair();
        tables.observe(&mut observer, a, b);
        tables.merge(a, b);
    }

    // Hierarchy phase: merge the C survivors down to one, growing the tree.
    let mut nodes: Vec<Option<(usize, usize)>> = Vec::new();
    let mut node_of: HashMap<u32, usize> = HashMap::new();
    let mut leaf_members: HashMap<usize, Vec<u32>> = HashMap::new();
    for &slot in &tables.active {
        let node = nodes.len();
        nodes.push(None);
        node_of.insert(slot, node);
        leaf_members.insert(node, tables.members[slot as usize].clone());
    }
    while tables.active.len() > 1 {
        let (a, b) = tables.best_pair();
        tables.observe(&mut observer, a, b);
        // the child with the lexicographically smaller representative is 0
        let (zero, one) = if tables.rep[a as usize] <= tables.rep[b as usize] {
            (node_of[&a], node_of[&b])
        } else {
            (node_of[&b], node_of[&a])
        };
        let parent = nodes.len();
        nodes.push(Some((zero, one)));
        tables.merge(a, b);
        node_of.insert(a, parent);
    }

    let root = node_of[tables.active.iter().next().expect("one cluster remains")];
    let mut lexicon = BrownLexicon::new("bt");
    let mut stack = vec![(root, String::new())];
    while let Some((node, path)) = stack.pop() {
        match nodes[node] {
            Some((zero, one)) => {
                stack.push((zero, format!("{path}0")));
                stack.push((one, format!("{path}1")));
            }
            None => {
                for &word in &leaf_members[&node] {
                    let (w, c) = &tables.words[word as usize];
                    lexicon.entries.insert(w.clone(), (path.clone(), *c));
                }
            }
        }
    }
    Ok(lexicon)
}

/// Cluster-level bigram statistics. Slot i starts as the singleton cluster
/// of word i (vocabulary in descending frequency); merges fold one slot into
/// another. Words outside `active` are frozen singletons that still carry
/// counts, so the bigram total N never changes.
struct Tables {
    words: Vec<(String, u64)>,
    word_id: HashMap<String, u32>,
    cnt: HashMap<(u32, u32), f64>,
    out: Vec<BTreeSet<u32>>,
    inc: Vec<BTreeSet<u32>>,
    left: Vec<f64>,
    right: Vec<f64>,
    total: f64,
    members: Vec<Vec<u32>>,
    rep: Vec<String>,
    active: BTreeSet<u32>,
}

impl Tables {
    fn new(words: Vec<(String, u64)>) -> Tables {
        let n = words.len();
        let word_id = words
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i as u32))
            .collect();
        Tables {
            word_id,
            cnt: HashMap::new(),
            out: vec![BTreeSet::new(); n],
            inc: vec![BTreeSet::new(); n],
            left: vec![0.0; n],
            right: vec![0.0; n],
            total: 0.0,
            members: (0..n as u32).map(|i| vec![i]).collect(),
            rep: words.iter().map(|(w, _)| w.clone()).collect(),
            active: BTreeSet::new(),
            words,
        }
    }

    fn add_bigram(&mut self, a: u32, b: u32) {
        *self.cnt.entry((a, b)).or_insert(0.0) += 1.0;
        self.out[a as usize].insert(b);
        self.inc[b as usize].insert(a);
        self.left[a as usize] += 1.0;
        self.right[b as usize] += 1.0;
        self.total += 1.0;
    }

    fn count(&self, a: u32, b: u32) -> f64 {
        self.cnt.get(&(a, b)).copied().unwrap_or(0.0)
    }

    /// One mutual-information term, in bits.
    fn term(&self, c: f64, l: f64, r: f64) -> f64 {
        if c <= 0.0 {
            0.0
        } else {
            (c / self.total) * ((c * self.total) / (l * r)).log2()
        }
    }

    fn q(&self, a: u32, b: u32) -> f64 {
        self.term(
            self.count(a, b),
            self.left[a as usize],
            self.right[b as usize],
        )
    }

    /// Sum of every information term touching `a`, each counted once.
    fn star(&self, a: u32) -> f64 {
        let mut s = 0.0;
        for &x in &self.out[a as usize] {
            s += self.q(a, x);
        }
        for &x in &self.inc[a as usize] {
            s += self.q(x, a);
        }
        s - self.q(a, a)
    }

    /// Loss of average mutual information if `a` and `b` were merged.
    fn loss(&self, a: u32, b: u32) -> f64 {
        let before = self.star(a) + self.star(b) - self.q(a, b) - self.q(b, a);
        let lm = self.left[a as usize] + self.left[b as usize];
        let rm = self.right[a as usize] + self.right[b as usize];
        let mut after = 0.0;
        let mut outs: BTreeSet<u32> = self.out[a as usize]
            .union(&self.out[b as usize])
            .copied()
            .collect();
        outs.remove(&a);
        outs.remove(&b);
        for &x in &outs {
            after += self.term(
                self.count(a, x) + self.count(b, x),
                lm,
                self.right[x as usize],
            );
        }
        let mut ins: BTreeSet<u32> = self.inc[a as usize]
            .union(&self.inc[b as usize])
            .copied()
            .collect();
        ins.remove(&a);
        ins.remove(&b);
        for &x in &ins {
            after += self.term(
                self.count(x, a) + self.count(x, b),
                self.left[x as usize],
                rm,
            );
        }
        let self_count = self.count(a, a) + self.count(a, b) + self.count(b, a) + self.count(b, b);
        after += self.term(self_count, lm, rm);
        before - after
    }

    /// Representative pair, ordered, for deterministic tie-breaking.
    fn rep_pair(&self, a: u32, b: u32) -> (&str, &str) {
        let (ra, rb) = (self.rep[a as usize].as_str(), self.rep[b as usize].as_str());
        if ra <= rb {
            (ra, rb)
        } else {
            (rb, ra)
        }
    }

    /// The active pair with the smallest merge loss; ties go to the pair
    /// with the lexicographically smaller representative pair.
    fn best_pair(&self) -> (u32, u32) {
        let mut best_pair = None;
        let mut best_loss = f64::INFINITY;
        let mut best_reps = ("", "");
        let slots: Vec<u32> = self.active.iter().copied().collect();
        for (i, &a) in slots.iter().enumerate() {
            for &b in &slots[i + 1..] {
                let loss = self.loss(a, b);
                let reps = self.rep_pair(a, b);
                if best_pair.is_none()
                    || loss < best_loss
                    || (loss == best_loss && reps < best_reps)
                {
                    best_pair = Some((a, b));
                    best_loss = loss;
                    best_reps = reps;
                }
            }
        }
        best_pair.expect("at least two active clusters")
    }

    fn observe(&self, observer: &mut impl FnMut(&MergeStep), a: u32, b: u32) {
        let slots: Vec<u32> = self.active.iter().copied().collect();
        let active = slots
            .iter()
            .map(|&s| {
                let mut ws: Vec<String> = self.members[s as usize]
                    .iter()
                    .map(|&w| self.words[w as usize].0.clone())
                    .collect();
                ws.sort();
                ws
            })
            .collect();
        let frozen = (0..self.words.len() as u32)
            .filter(|s| !self.active.contains(s) && !self.members[*s as usize].is_empty())
            .filter(|s| self.members[*s as usize] == vec![*s])
            .map(|s| self.words[s as usize].0.clone())
            .collect();
        let ai = slots.iter().position(|&s| s == a).expect("a active");
        let bi = slots.iter().position(|&s| s == b).expect("b active");
        observer(&MergeStep {
            active,
            frozen,
            merged: (ai, bi),
        });
    }

    /// Folds cluster `b` into cluster `a`.
    fn merge(&mut self, a: u32, b: u32) {
        let outs: Vec<u32> = self.out[b as usize].iter().copied().collect();
        for x in outs {
            if let Some(c) = self.cnt.remove(&(b, x)) {
                let tx = if x == b { a } else { x };
                *self.cnt.entry((a, tx)).or_insert(0.0) += c;
                self.out[a as usize].insert(tx);
                if x == b {
                    self.inc[a as usize].insert(a);
                } else {
                    self.inc[x as usize].remove(&b);
                    self.inc[x as usize].insert(a);
                }
            }
        }
        let ins: Vec<u32> = self.inc[b as usize].iter().copied().collect();
        for x in ins {
            if let Some(c) = self.cnt.remove(&(x, b)) {
                let sx = if x == b { a } else { x };
                *self.cnt.entry((sx, a)).or_insert(0.0) += c;
                self.inc[a as usize].insert(sx);
                if x == b {
                    self.out[a as usize].insert(a);
                } else {
                    self.out[x as usize].remove(&b);
                    self.out[x as usize].insert(a);
                }
            }
        }
        self.out[b as usize].clear();
        self.inc[b as usize].clear();
        self.out[a as usize].remove(&b);
        self.inc[a as usize].remove(&b);
        self.left[a as usize] += self.left[b as usize];
        self.right[a as usize] += self.right[b as usize];
        self.left[b as usize] = 0.0;
        self.right[b as usize] = 0.0;
        let moved = std::mem::take(&mut self.members[b as usize]);
        self.members[a as usize].extend(moved);
        if self.rep[b as usize] < self.rep[a as usize] {
            self.rep[a as usize] = self.rep[b as usize].clone();
        }
        self.active.remove(&b);
    }
}
