//! TOML run configuration: feature-family switches plus the lexicon stack,
//! resolved into a [`FeatureConfig`] by loading every referenced file.
//!
//! ```toml
//! scheme = "BILOU"
//! window = 2
//!
//! [families]
//! trigram = false
//! char_ngram = false
//!
//! [[brown]]
//! path = "brown-reuters.txt"
//!
//! [[flat]]
//! path = "clark-a.txt"
//! namespace = "ca"
//!
//! [gazetteer]
//! paths = ["illinois.tsv"]
//! ```
//!
//! Paths are relative to the configuration file. Every lexicon must load
//! successfully before the caller gets a config back.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::corpus::TagScheme;
use crate::features::FeatureConfig;
use crate::lexicons;
use crate::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: Option<String>,
    pub window: Option<usize>,
    pub no_match_marker: Option<String>,
    #[serde(default)]
    pub families: Families,
    #[serde(default)]
    pub brown: Vec<BrownRef>,
    #[serde(default)]
    pub flat: Vec<FlatRef>,
    pub gazetteer: Option<GazetteerRef>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Families {
    pub token: Option<bool>,
    pub token_shape: Option<bool>,
    pub prev_pred: Option<bool>,
    pub sentence_begin: Option<bool>,
    pub prefix: Option<bool>,
    pub suffix: Option<bool>,
    pub bigram: Option<bool>,
    pub trigram: Option<bool>,
    pub char_ngram: Option<bool>,
    pub char_ngram_min: Option<usize>,
    pub char_ngram_max: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrownRef {
    pub path: PathBuf,
    pub namespace: Option<String>,
    pub prefix_lengths: Option<Vec<usize>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlatRef {
    pub path: PathBuf,
    pub namespace: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GazetteerRef {
    pub paths: Vec<PathBuf>,
}

fn anchored(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Parses a configuration file and loads every lexicon it references.
pub fn load_run_config(path: impl AsRef<Path>) -> Result<FeatureConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    let raw: RunConfig =
        toml::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    resolve_run_config(raw, base)
}

pub fn resolve_run_config(raw: RunConfig, base: &Path) -> Result<FeatureConfig> {
    let mut config = FeatureConfig::default();
    if let Some(scheme) = raw.scheme {
        config.scheme = TagScheme::parse(&scheme)?;
    }
    if let Some(window) = raw.window {
        config.window = window;
    }
    if let Some(marker) = raw.no_match_marker {
        config.no_match_marker = marker;
    }
    let fam = raw.families;
    config.token = fam.token.unwrap_or(config.token);
    config.token_shape = fam.token_shape.unwrap_or(config.token_shape);
    config.prev_pred = fam.prev_pred.unwrap_or(config.prev_pred);
    config.sentence_begin = fam.sentence_begin.unwrap_or(config.sentence_begin);
    config.prefix = fam.prefix.unwrap_or(config.prefix);
    config.suffix = fam.suffix.unwrap_or(config.suffix);
    config.bigram = fam.bigram.unwrap_or(config.bigram);
    config.trigram = fam.trigram.unwrap_or(config.trigram);
    config.char_ngram = fam.char_ngram.unwrap_or(config.char_ngram);
    config.char_ngram_range = (
        fam.char_ngram_min.unwrap_or(config.char_ngram_range.0),
        fam.char_ngram_max.unwrap_or(config.char_ngram_range.1),
    );

    for brown in raw.brown {
        let namespace = brown.namespace.as_deref().unwrap_or("bt");
        let mut lex = lexicons::load_brown(anchored(base, &brown.path), namespace)?;
        if let Some(lengths) = brown.prefix_lengths {
            if lengths.is_empty() || lengths.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(
                    "brown prefix_lengths must be non-empty and strictly increasing",
                ));
            }
            lex.prefix_lengths = lengths;
        }
        config.brown.push(lex);
    }
    for flat in raw.flat {
        config.flat.push(lexicons::load_flat(
            anchored(base, &flat.path),
            &flat.namespace,
        )?);
    }
    if let Some(gaz) = raw.gazetteer {
        let paths: Vec<PathBuf> = gaz.paths.iter().map(|p| anchored(base, p)).collect();
        config.gazetteer = Some(lexicons::load_gazetteers(&paths)?);
    }
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn minimal_config_uses_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        fs::write(&path, "scheme = \"BIO\"\n").unwrap();
        let config = load_run_config(&path).unwrap();
        assert_eq!(config.scheme, TagScheme::Bio);
        assert_eq!(config.window, 2);
        assert!(config.token && config.char_ngram);
        assert!(config.brown.is_empty());
    }

    #[test]
    fn lexicons_load_relative_to_the_config() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "0101\tword\t3\n").unwrap();
        fs::write(dir.path().join("c.txt"), "word 17\n").unwrap();
        fs::write(dir.path().join("g.txt"), "new york\tLOC\n").unwrap();
        let path = dir.path().join("cfg.toml");
        fs::write(
            &path,
            "[[brown]]\npath = \"b.txt\"\n\n[[flat]]\npath = \"c.txt\"\nnamespace = \"ca\"\n\n[gazetteer]\npaths = [\"g.txt\"]\n",
        )
        .unwrap();
        let config = load_run_config(&path).unwrap();
        assert_eq!(config.brown.len(), 1);
        assert_eq!(config.brown[0].namespace, "bt");
        assert_eq!(config.flat[0].class_of("word"), Some("17"));
        assert!(config.gazetteer.unwrap().lookup("new york").is_some());
    }

    #[test]
    fn missing_lexicon_fails_loudly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        fs::write(
            &path,
            "[[flat]]\npath = \"nowhere.txt\"\nnamespace = \"ca\"\n",
        )
        .unwrap();
        assert!(load_run_config(&path).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        fs::write(&path, "not_a_key = 3\n").unwrap();
        assert!(load_run_config(&path).is_err());
    }
}
