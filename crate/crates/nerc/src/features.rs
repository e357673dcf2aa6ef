//! Sparse binary feature extraction: shallow local features, gazetteer
//! features, Brown path features and flat-cluster features, stacked under
//! distinct namespaces.
//!
//! Feature keys are plain strings of the form `family=value`. Families that
//! fire over the context window carry the offset in the family name, e.g.
//! `w[-2]=1994an`, `wc[+1]=hiriburuan,lc`; the focus token (offset 0) keeps
//! the bare form `w=ekuadorko`. Positions outside the sentence contribute
//! `__BOS__`/`__EOS__` padding values so the window shape is constant.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sentence, TagScheme};
use crate::lexicons::{BrownLexicon, FlatClusterLexicon, Gazetteer};
use crate::{Error, Result};

pub const BOS: &str = "__BOS__";
pub const EOS: &str = "__EOS__";

/// Declarative description of the enabled feature families and the ordered
/// stack of lexicons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub scheme: TagScheme,
    /// Window half-width; 2 means a 5 token window.
    pub window: usize,
    pub token: bool,
    pub token_shape: bool,
    pub prev_pred: bool,
    pub sentence_begin: bool,
    pub prefix: bool,
    pub suffix: bool,
    pub bigram: bool,
    pub trigram: bool,
    pub char_ngram: bool,
    pub char_ngram_range: (usize, usize),
    pub brown: Vec<BrownLexicon>,
    pub flat: Vec<FlatClusterLexicon>,
    pub gazetteer: Option<Gazetteer>,
    /// Class emitted for words missing from a flat cluster lexicon.
    pub no_match_marker: String,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            scheme: TagScheme::Bilou,
            window: 2,
            token: true,
            token_shape: true,
            prev_pred: true,
            sentence_begin: true,
            prefix: true,
            suffix: true,
            bigram: true,
            trigram: true,
            char_ngram: true,
            char_ngram_range: (2, 5),
            brown: Vec::new(),
            flat: Vec::new(),
            gazetteer: None,
            no_match_marker: "O".to_string(),
        }
    }
}

impl FeatureConfig {
    /// The local baseline: every shallow family on, no lexicons.
    pub fn local(scheme: TagScheme) -> Self {
        FeatureConfig {
            scheme,
            ..Default::default()
        }
    }

    /// A configuration with every family disabled, for tests.
    pub fn empty(scheme: TagScheme) -> Self {
        FeatureConfig {
            scheme,
            token: false,
            token_shape: false,
            prev_pred: false,
            sentence_begin: false,
            prefix: false,
            suffix: false,
            bigram: false,
            trigram: false,
            char_ngram: false,
            ..FeatureConfig::local(scheme)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.char_ngram_range;
        if self.char_ngram && (lo == 0 || lo > hi) {
            return Err(Error::invalid(format!(
                "char n-gram range ({lo},{hi}) must satisfy 1 <= min <= max"
            )));
        }
        let mut namespaces: Vec<&str> = self
            .brown
            .iter()
            .map(|b| b.namespace.as_str())
            .chain(self.flat.iter().map(|f| f.namespace.as_str()))
            .collect();
        namespaces.sort_unstable();
        for pair in namespaces.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::invalid(format!(
                    "duplicate lexicon namespace `{}`",
                    pair[0]
                )));
            }
        }
        if namespaces.iter().any(|ns| ns.is_empty()) {
            return Err(Error::invalid("empty lexicon namespace"));
        }
        Ok(())
    }
}

/// Document-scoped memory of the last outcome committed for each surface
/// form. Frozen while a sentence is being decoded, updated afterwards,
/// cleared at document boundaries.
#[derive(Debug, Clone, Default)]
pub struct DecodeState {
    prev: HashMap<String, String>,
}

impl DecodeState {
    pub fn new() -> Self {
        DecodeState::default()
    }

    pub fn outcome(&self, surface: &str) -> Option<&str> {
        self.prev.get(surface).map(String::as_str)
    }

    /// Commits a decoded (or gold) label sequence for a sentence.
    pub fn commit(&mut self, sentence: &Sentence, labels: &[String]) {
        for (token, label) in sentence.tokens.iter().zip(labels) {
            self.prev.insert(token.surface.clone(), label.clone());
        }
    }

    /// Called at document boundaries.
    pub fn clear(&mut self) {
        self.prev.clear();
    }
}

/// Shape class of a token. Exactly one class per token; digit rules apply
/// first (a word with exactly two or four digit characters is `2d`/`4d`
/// regardless of the rest), then uppercase rules, then lowercase.
pub fn shape_of(token: &str) -> &'static str {
    let mut total = 0usize;
    let mut digits = 0usize;
    let mut letters = 0usize;
    let mut lowers = 0usize;
    let mut uppers = 0usize;
    let (mut hyphen, mut slash, mut comma, mut period) = (false, false, false, false);
    for ch in token.chars() {
        total += 1;
        if ch.is_ascii_digit() {
            digits += 1;
        }
        if ch.is_alphabetic() {
            letters += 1;
            if ch.is_lowercase() {
                lowers += 1;
            }
            if ch.is_uppercase() {
                uppers += 1;
            }
        }
        match ch {
            '-' => hyphen = true,
            '/' => slash = true,
            ',' => comma = true,
            '.' => period = true,
            _ => {}
        }
    }
    if total > 0 && lowers == total {
        return "lc";
    }
    if digits == 2 {
        return "2d";
    }
    if digits == 4 {
        return "4d";
    }
    if digits > 0 {
        return if letters > 0 {
            "an"
        } else if hyphen {
            "dh"
        } else if slash {
            "ds"
        } else if comma {
            "dc"
        } else if period {
            "dp"
        } else {
            "num"
        };
    }
    if total > 0 && uppers == total {
        return if total == 1 { "sc" } else { "ac" };
    }
    // acronym: uppercase letters and periods only, e.g. U.S. or I.B.M
    if period
        && letters > 0
        && uppers == letters
        && token.chars().all(|c| c == '.' || c.is_uppercase())
    {
        return "acr";
    }
    if token.chars().next().is_some_and(char::is_uppercase) {
        return "ic";
    }
    "other"
}

fn key(out: &mut Vec<String>, family: &str, offset: isize, value: &str) {
    if offset == 0 {
        out.push(format!("{family}={value}"));
    } else if offset < 0 {
        out.push(format!("{family}[{offset}]={value}"));
    } else {
        out.push(format!("{family}[+{offset}]={value}"));
    }
}

fn surface_at(sentence: &Sentence, pos: isize) -> Option<&str> {
    if pos < 0 || pos as usize >= sentence.len() {
        None
    } else {
        Some(sentence.surface(pos as usize))
    }
}

fn pad(pos: isize) -> &'static str {
    if pos < 0 {
        BOS
    } else {
        EOS
    }
}

fn surface_or_pad(sentence: &Sentence, pos: isize) -> String {
    surface_at(sentence, pos)
        .map(str::to_string)
        .unwrap_or_else(|| pad(pos).to_string())
}

fn shape_or_pad(sentence: &Sentence, pos: isize) -> String {
    surface_at(sentence, pos)
        .map(|s| shape_of(s).to_string())
        .unwrap_or_else(|| pad(pos).to_string())
}

/// Previous-prediction feature value: `null` when the word was never seen in
/// the document, `other` for an outside outcome, the label itself otherwise.
fn pd_of(state: &DecodeState, surface: &str) -> String {
    match state.outcome(surface) {
        None => "null".to_string(),
        Some("O") => "other".to_string(),
        Some(label) => label.to_string(),
    }
}

fn pd_or_pad(sentence: &Sentence, pos: isize, state: &DecodeState) -> String {
    surface_at(sentence, pos)
        .map(|s| pd_of(state, s))
        .unwrap_or_else(|| pad(pos).to_string())
}

/// The shallow local templates: token, token shape and previous prediction
/// over the window, plus sentence-begin, affixes, bigrams, trigrams and
/// character n-grams anchored at the focus token.
pub fn local_features(
    sentence: &Sentence,
    i: usize,
    state: &DecodeState,
    config: &FeatureConfig,
    out: &mut Vec<String>,
) {
    let i = i as isize;
    let w = config.window as isize;
    for d in -w..=w {
        let pos = i + d;
        if config.token {
            let value = surface_at(sentence, pos)
                .map(str::to_lowercase)
                .unwrap_or_else(|| pad(pos).to_string());
            key(out, "w", d, &value);
        }
        if config.token_shape {
            let value = surface_at(sentence, pos)
                .map(|s| format!("{},{}", s.to_lowercase(), shape_of(s)))
                .unwrap_or_else(|| pad(pos).to_string());
            key(out, "wc", d, &value);
        }
        if config.prev_pred {
            key(out, "pd", d, &pd_or_pad(sentence, pos, state));
        }
    }

    let cur = sentence.surface(i as usize);
    if config.sentence_begin && i == 0 {
        out.push("S=begin".to_string());
    }
    if config.prefix {
        let chars: Vec<char> = cur.chars().collect();
        let mut last = 0;
        for len in [3usize, 4] {
            let len = len.min(chars.len());
            if len == 0 || len == last {
                continue;
            }
            last = len;
            out.push(format!("pre={}", chars[..len].iter().collect::<String>()));
        }
    }
    if config.suffix {
        let chars: Vec<char> = cur.chars().collect();
        let mut last = 0;
        for len in 1usize..=4 {
            let len = len.min(chars.len());
            if len == 0 || len == last {
                continue;
            }
            last = len;
            out.push(format!(
                "suf={}",
                chars[chars.len() - len..].iter().collect::<String>()
            ));
        }
    }
    if config.bigram {
        let (pw, nw) = (
            surface_or_pad(sentence, i - 1),
            surface_or_pad(sentence, i + 1),
        );
        let (pc, nc) = (shape_or_pad(sentence, i - 1), shape_or_pad(sentence, i + 1));
        let cc = shape_of(cur);
        out.push(format!("pw,w={pw},{cur}"));
        out.push(format!("pwc,wc={pc},{cc}"));
        out.push(format!("w,nw={cur},{nw}"));
        out.push(format!("wc,nc={cc},{nc}"));
    }
    if config.trigram {
        let (ppw, pw) = (
            surface_or_pad(sentence, i - 2),
            surface_or_pad(sentence, i - 1),
        );
        let (nw, nnw) = (
            surface_or_pad(sentence, i + 1),
            surface_or_pad(sentence, i + 2),
        );
        let (ppc, pc) = (shape_or_pad(sentence, i - 2), shape_or_pad(sentence, i - 1));
        let (nc, nnc) = (shape_or_pad(sentence, i + 1), shape_or_pad(sentence, i + 2));
        let cc = shape_of(cur);
        out.push(format!("ppw,pw,w={ppw},{pw},{cur}"));
        out.push(format!("ppwc,pwc,wc={ppc},{pc},{cc}"));
        out.push(format!("w,nw,nnw={cur},{nw},{nnw}"));
        out.push(format!("wc,nc,nnc={cc},{nc},{nnc}"));
    }
    if config.char_ngram {
        let chars: Vec<char> = cur.to_lowercase().chars().collect();
        let (lo, hi) = config.char_ngram_range;
        for n in lo..=hi.min(chars.len()) {
            for window in chars.windows(n) {
                out.push(format!("ng={}", window.iter().collect::<String>()));
            }
        }
    }
}

/// Greedy left-to-right longest-match gazetteer tags for the whole sentence:
/// for each position, one positional tag per matched entity type.
pub fn gazetteer_tags(sentence: &Sentence, gaz: &Gazetteer, scheme: TagScheme) -> Vec<Vec<String>> {
    let lowered: Vec<String> = sentence
        .tokens
        .iter()
        .map(|t| t.surface.to_lowercase())
        .collect();
    let mut tags: Vec<Vec<String>> = vec![Vec::new(); sentence.len()];
    let max_len = gaz.max_key_tokens();
    let mut start = 0usize;
    while start < lowered.len() {
        let mut matched = 0usize;
        let limit = max_len.min(lowered.len() - start);
        for len in (1..=limit).rev() {
            let candidate = lowered[start..start + len].join(" ");
            if let Some(types) = gaz.lookup(&candidate) {
                for ty in types {
                    for (offset, slot) in tags[start..start + len].iter_mut().enumerate() {
                        slot.push(positional_tag(offset, len, ty, scheme));
                    }
                }
                matched = len;
                break;
            }
        }
        start += matched.max(1);
    }
    tags
}

fn positional_tag(offset: usize, len: usize, ty: &str, scheme: TagScheme) -> String {
    match scheme {
        TagScheme::Bio => {
            if offset == 0 {
                format!("B-{ty}")
            } else {
                format!("I-{ty}")
            }
        }
        TagScheme::Bilou => {
            if len == 1 {
                format!("U-{ty}")
            } else if offset == 0 {
                format!("B-{ty}")
            } else if offset == len - 1 {
                format!("L-{ty}")
            } else {
                format!("I-{ty}")
            }
        }
    }
}

/// Dictionary features for the focus token: the positional entity class the
/// gazetteer match assigns it (or `O`), and the class combined with the
/// token itself for matched tokens.
pub fn gazetteer_features(
    sentence: &Sentence,
    i: usize,
    gaz: &Gazetteer,
    scheme: TagScheme,
    out: &mut Vec<String>,
) {
    let tags = gazetteer_tags(sentence, gaz, scheme);
    if tags[i].is_empty() {
        out.push("dict=O".to_string());
        return;
    }
    let lower = sentence.surface(i).to_lowercase();
    for tag in &tags[i] {
        out.push(format!("dict={tag}"));
        out.push(format!("dict,w={tag},{lower}"));
    }
}

/// Brown path features: existing path prefixes for every window position,
/// the same combined with the token shape, prefix bigrams around the focus,
/// and the two previous-prediction companions.
pub fn brown_features(
    sentence: &Sentence,
    i: usize,
    lex: &BrownLexicon,
    state: &DecodeState,
    config: &FeatureConfig,
    out: &mut Vec<String>,
) {
    let ns = &lex.namespace;
    let i = i as isize;
    let w = config.window as isize;
    for d in -w..=w {
        let Some(surface) = surface_at(sentence, i + d) else {
            continue;
        };
        let shape = shape_of(surface);
        for prefix in lex.prefixes(surface) {
            key(out, ns, d, &prefix);
            key(out, &format!("c,{ns}"), d, &format!("{shape},{prefix}"));
        }
    }
    // prefix bigrams over (previous, focus) and (focus, next)
    let cur_prefixes = surface_at(sentence, i)
        .map(|s| lex.prefixes(s))
        .unwrap_or_default();
    if let Some(prev) = surface_at(sentence, i - 1) {
        for pp in lex.prefixes(prev) {
            for cp in &cur_prefixes {
                out.push(format!("p{ns},{ns}={pp},{cp}"));
            }
        }
    }
    if let Some(next) = surface_at(sentence, i + 1) {
        for np in lex.prefixes(next) {
            for cp in &cur_prefixes {
                out.push(format!("{ns},n{ns}={cp},{np}"));
            }
        }
    }
    let cur = sentence.surface(i as usize);
    out.push(format!("pd,w={},{}", pd_of(state, cur), cur.to_lowercase()));
    out.push(format!(
        "pd,pdp={},{}",
        pd_of(state, cur),
        pd_or_pad(sentence, i - 1, state)
    ));
}

/// Flat cluster features: a class look-up (or the no-match marker) for every
/// window position, under the lexicon's namespace.
pub fn flat_cluster_features(
    sentence: &Sentence,
    i: usize,
    lex: &FlatClusterLexicon,
    config: &FeatureConfig,
    out: &mut Vec<String>,
) {
    let i = i as isize;
    let w = config.window as isize;
    for d in -w..=w {
        let pos = i + d;
        let value = match surface_at(sentence, pos) {
            Some(surface) => lex
                .class_of(surface)
                .unwrap_or(&config.no_match_marker)
                .to_string(),
            None => pad(pos).to_string(),
        };
        key(out, &lex.namespace, d, &value);
    }
}

/// The full stacked feature set for one token: the union of every enabled
/// family, sorted and deduplicated. Pure given its inputs.
pub fn extract(
    sentence: &Sentence,
    i: usize,
    state: &DecodeState,
    config: &FeatureConfig,
) -> Vec<String> {
    let mut out = Vec::new();
    local_features(sentence, i, state, config, &mut out);
    if let Some(gaz) = &config.gazetteer {
        gazetteer_features(sentence, i, gaz, config.scheme, &mut out);
    }
    for lex in &config.brown {
        brown_features(sentence, i, lex, state, config, &mut out);
    }
    for lex in &config.flat {
        flat_cluster_features(sentence, i, lex, config, &mut out);
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Feature dump for a whole corpus: per sentence, each token's surface with
/// its sorted feature keys. Gold labels, when present, are committed into
/// the previous-prediction memory after each sentence (memory resets at
/// document boundaries), so the dump reflects what a decoder would see with
/// perfect history.
pub fn featurize_corpus(
    corpus: &Corpus,
    config: &FeatureConfig,
) -> Vec<Vec<(String, Vec<String>)>> {
    let mut out = Vec::new();
    let mut state = DecodeState::new();
    for doc in &corpus.documents {
        state.clear();
        for sentence in &doc.sentences {
            let rows = (0..sentence.len())
                .map(|i| {
                    (
                        sentence.surface(i).to_string(),
                        extract(sentence, i, &state, config),
                    )
                })
                .collect();
            if let Some(gold) = &sentence.gold {
                state.commit(sentence, gold);
            }
            out.push(rows);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicons::Gazetteer;

    fn sentence(words: &[&str]) -> Sentence {
        Sentence::from_surfaces(words, None)
    }

    #[test]
    fn shapes_of_the_basque_example() {
        assert_eq!(shape_of("1994an"), "4d");
        assert_eq!(shape_of("Ekuadorko"), "ic");
        assert_eq!(shape_of(","), "other");
        assert_eq!(shape_of("hiriburuan"), "lc");
    }

    #[test]
    fn shapes_cover_remaining_classes() {
        assert_eq!(shape_of("12"), "2d");
        assert_eq!(shape_of("ab12"), "2d");
        assert_eq!(shape_of("1234"), "4d");
        assert_eq!(shape_of("1/2"), "2d", "digit count rules come first");
        assert_eq!(shape_of("123"), "num");
        assert_eq!(shape_of("1/2/3"), "ds");
        assert_eq!(shape_of("3-4-5"), "dh");
        assert_eq!(shape_of("12,000"), "dc");
        assert_eq!(shape_of("1.5.9"), "dp");
        assert_eq!(shape_of("x123"), "an");
        assert_eq!(shape_of("NATO"), "ac");
        assert_eq!(shape_of("A"), "sc");
        assert_eq!(shape_of("U.S."), "acr");
        assert_eq!(shape_of("I.B.M"), "acr");
        assert_eq!(shape_of("eBay"), "other");
        assert_eq!(shape_of("..."), "other");
        assert_eq!(shape_of("Ñandú"), "ic");
    }

    #[test]
    fn every_token_gets_exactly_one_shape() {
        for token in ["a", "A", "aA", "1", "-", "💡", "a💡B", "１２３"] {
            let shape = shape_of(token);
            assert!(!shape.is_empty(), "{token}");
        }
    }

    fn basque_sentence() -> Sentence {
        sentence(&[
            "Morras",
            "munduko",
            "txapeldun",
            "izan",
            "zen",
            "juniorretan",
            "1994an",
            ",",
            "Ekuadorko",
            "hiriburuan",
            ",",
            "Quiton",
        ])
    }

    #[test]
    fn affixes_at_the_focus_token() {
        let mut out = Vec::new();
        let config = FeatureConfig {
            token: false,
            token_shape: false,
            prev_pred: false,
            bigram: false,
            trigram: false,
            char_ngram: false,
            ..FeatureConfig::default()
        };
        local_features(
            &basque_sentence(),
            8,
            &DecodeState::new(),
            &config,
            &mut out,
        );
        for expected in [
            "pre=Eku", "pre=Ekua", "suf=o", "suf=ko", "suf=rko", "suf=orko",
        ] {
            assert!(out.contains(&expected.to_string()), "{out:?}");
        }
        assert!(!out.contains(&"S=begin".to_string()));
    }

    #[test]
    fn short_tokens_truncate_affixes() {
        let mut out = Vec::new();
        let config = FeatureConfig {
            token: false,
            token_shape: false,
            prev_pred: false,
            sentence_begin: false,
            bigram: false,
            trigram: false,
            char_ngram: false,
            ..FeatureConfig::default()
        };
        local_features(
            &sentence(&["ab"]),
            0,
            &DecodeState::new(),
            &config,
            &mut out,
        );
        assert_eq!(
            out,
            vec!["pre=ab", "suf=b", "suf=ab"],
            "clipped lengths deduplicate"
        );
    }

    #[test]
    fn bigram_keys_of_the_basque_example() {
        let mut out = Vec::new();
        let config = FeatureConfig {
            token: false,
            token_shape: false,
            prev_pred: false,
            sentence_begin: false,
            prefix: false,
            suffix: false,
            trigram: false,
            char_ngram: false,
            ..FeatureConfig::default()
        };
        local_features(
            &basque_sentence(),
            8,
            &DecodeState::new(),
            &config,
            &mut out,
        );
        assert_eq!(
            out,
            vec![
                "pw,w=,,Ekuadorko",
                "pwc,wc=other,ic",
                "w,nw=Ekuadorko,hiriburuan",
                "wc,nc=ic,lc",
            ]
        );
    }

    #[test]
    fn one_token_sentence_pads_the_window() {
        let config = FeatureConfig::local(TagScheme::Bilou);
        let out = extract(&sentence(&["x"]), 0, &DecodeState::new(), &config);
        for expected in [
            "w[-2]=__BOS__",
            "w[-1]=__BOS__",
            "w=x",
            "w[+1]=__EOS__",
            "w[+2]=__EOS__",
            "wc[-1]=__BOS__",
            "pd[+1]=__EOS__",
            "S=begin",
        ] {
            assert!(out.contains(&expected.to_string()), "{expected} in {out:?}");
        }
        // window symmetry: one token family key per offset
        assert_eq!(
            out.iter()
                .filter(|k| k.starts_with("w=") || k.starts_with("w["))
                .count(),
            5
        );
        assert_eq!(out.iter().filter(|k| k.starts_with("pd")).count(), 5);
    }

    #[test]
    fn prev_prediction_values() {
        let mut state = DecodeState::new();
        let s = sentence(&["John", "ran"]);
        state.commit(&s, &["U-PER".to_string(), "O".to_string()]);
        assert_eq!(pd_of(&state, "John"), "U-PER");
        assert_eq!(pd_of(&state, "ran"), "other");
        assert_eq!(pd_of(&state, "unseen"), "null");
        state.clear();
        assert_eq!(pd_of(&state, "John"), "null");
    }

    #[test]
    fn gazetteer_longest_match() {
        let mut gaz = Gazetteer::default();
        gaz.entries
            .entry("new york city".into())
            .or_default()
            .insert("LOC".into());
        gaz.entries
            .entry("new york".into())
            .or_default()
            .insert("LOC".into());
        let s = sentence(&["New", "York", "City", "is"]);
        let tags = gazetteer_tags(&s, &gaz, TagScheme::Bilou);
        assert_eq!(tags[0], vec!["B-LOC"]);
        assert_eq!(tags[1], vec!["I-LOC"]);
        assert_eq!(tags[2], vec!["L-LOC"]);
        assert!(tags[3].is_empty());

        let mut out = Vec::new();
        gazetteer_features(&s, 0, &gaz, TagScheme::Bilou, &mut out);
        assert!(out.contains(&"dict=B-LOC".to_string()));
        assert!(out.contains(&"dict,w=B-LOC,new".to_string()));
        out.clear();
        gazetteer_features(&s, 3, &gaz, TagScheme::Bilou, &mut out);
        assert_eq!(out, vec!["dict=O"]);
    }

    #[test]
    fn gazetteer_multiple_types() {
        let mut gaz = Gazetteer::default();
        let types = gaz.entries.entry("washington".into()).or_default();
        types.insert("LOC".into());
        types.insert("PER".into());
        let s = sentence(&["Washington"]);
        let mut out = Vec::new();
        gazetteer_features(&s, 0, &gaz, TagScheme::Bilou, &mut out);
        assert!(out.contains(&"dict=U-LOC".to_string()));
        assert!(out.contains(&"dict=U-PER".to_string()));
    }

    fn basque_brown() -> BrownLexicon {
        let mut lex = BrownLexicon::new("bt");
        lex.entries.insert("1994an".into(), ("011111".into(), 17));
        lex.entries
            .insert("Ekuadorko".into(), ("001001".into(), 12));
        lex.entries
            .insert("hiriburuan".into(), ("010110".into(), 35));
        lex
    }

    #[test]
    fn brown_window_and_shape_features() {
        let config = FeatureConfig::empty(TagScheme::Bilou);
        let mut out = Vec::new();
        brown_features(
            &basque_sentence(),
            8,
            &basque_brown(),
            &DecodeState::new(),
            &config,
            &mut out,
        );
        for expected in [
            "bt[-2]=0111",
            "bt[-2]=011111",
            "bt=0010",
            "bt=001001",
            "bt[+1]=0101",
            "c,bt[-2]=4d,0111",
            "c,bt=ic,0010",
            "c,bt[+1]=lc,0101",
            "pd,w=null,ekuadorko",
            "pd,pdp=null,null",
        ] {
            assert!(out.contains(&expected.to_string()), "{expected} in {out:?}");
        }
        // the commas are absent from the lexicon: no keys at odd offsets
        assert!(!out
            .iter()
            .any(|k| k.starts_with("bt[-1]") || k.starts_with("bt[+2]")));
    }

    #[test]
    fn brown_bigram_prefix_pairs() {
        let mut lex = BrownLexicon::new("bt");
        lex.entries.insert("a".into(), ("0000".into(), 1));
        lex.entries.insert("b".into(), ("000011".into(), 1));
        let config = FeatureConfig::empty(TagScheme::Bilou);
        let mut out = Vec::new();
        brown_features(
            &sentence(&["a", "b"]),
            1,
            &lex,
            &DecodeState::new(),
            &config,
            &mut out,
        );
        assert!(out.contains(&"pbt,bt=0000,0000".to_string()));
        assert!(out.contains(&"pbt,bt=0000,000011".to_string()));
        assert!(!out.iter().any(|k| k.starts_with("bt,nbt=")));
    }

    #[test]
    fn flat_cluster_window_with_no_match_marker() {
        let mut lex = FlatClusterLexicon::new("ca", 200);
        lex.entries.insert("ekuadorko".into(), "175".into());
        lex.entries.insert("1994an".into(), "158".into());
        lex.entries.insert("hiriburuan".into(), "184".into());
        let config = FeatureConfig::empty(TagScheme::Bilou);
        let mut out = Vec::new();
        flat_cluster_features(&basque_sentence(), 8, &lex, &config, &mut out);
        assert_eq!(
            out,
            vec!["ca[-2]=158", "ca[-1]=O", "ca=175", "ca[+1]=184", "ca[+2]=O"]
        );
    }

    #[test]
    fn extract_with_everything_off_is_empty() {
        let config = FeatureConfig::empty(TagScheme::Bilou);
        assert!(extract(&sentence(&["x"]), 0, &DecodeState::new(), &config).is_empty());
    }

    #[test]
    fn stacking_lexicons_only_adds_keys() {
        let s = basque_sentence();
        let state = DecodeState::new();
        let mut base = FeatureConfig::local(TagScheme::Bilou);
        let small = extract(&s, 8, &state, &base);
        base.brown.push(basque_brown());
        let mut lex = FlatClusterLexicon::new("ca", 200);
        lex.entries.insert("ekuadorko".into(), "175".into());
        base.flat.push(lex);
        let large = extract(&s, 8, &state, &base);
        for k in &small {
            assert!(large.contains(k), "{k} lost by stacking");
        }
        assert!(large.len() > small.len());
    }

    #[test]
    fn extract_is_deterministic() {
        let s = basque_sentence();
        let state = DecodeState::new();
        let mut config = FeatureConfig::local(TagScheme::Bilou);
        config.brown.push(basque_brown());
        let a = extract(&s, 8, &state, &config);
        let b = extract(&s, 8, &state, &config);
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(a, sorted, "keys come out sorted and unique");
    }

    #[test]
    fn duplicate_namespaces_rejected() {
        let mut config = FeatureConfig::local(TagScheme::Bilou);
        config.flat.push(FlatClusterLexicon::new("ca", 10));
        config.flat.push(FlatClusterLexicon::new("ca", 20));
        assert!(config.validate().is_err());
        config.flat[1].namespace = "cb".into();
        assert!(config.validate().is_ok());
    }
}
