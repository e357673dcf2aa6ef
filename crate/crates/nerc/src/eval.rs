//! Phrase and token scoring with conlleval semantics, plus the
//! training-data-reduction harness.
//!
//! Phrase scores count exact (start, end, type) span matches over the
//! repaired decoding of both label streams. Token scores compare per-token
//! entity types (non-O only); accuracy is the per-token type match rate over
//! all tokens. Both are therefore independent of the tag scheme used to
//! encode the same spans.

use std::collections::BTreeMap;
use std::fmt;

use crate::corpus::{
    convert_scheme, decode_labels, detect_scheme, split_fraction, Corpus, TagScheme,
};
use crate::features::FeatureConfig;
use crate::model::{train, PerceptronModel, TrainOptions};
use crate::{Error, Result};

/// Precision/recall/F1 with the underlying counts. Percentages are stored at
/// full precision; [`EvalReport`]'s `Display` rounds to two decimals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Score {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Score {
    fn from_counts(tp: u64, fp: u64, fn_: u64) -> Score {
        let precision = if tp + fp > 0 {
            100.0 * tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            100.0 * tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Score {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Micro-averaged phrase score over all entity types.
    pub overall: Score,
    /// Phrase score per entity type.
    pub per_type: BTreeMap<String, Score>,
    /// Token-level score over non-O tokens (each token its own chunk).
    pub token: Score,
    /// Token-level score per entity type.
    pub token_per_type: BTreeMap<String, Score>,
    /// Per-token type match rate over all tokens, in percent.
    pub accuracy: f64,
    pub tokens: u64,
}

impl EvalReport {
    pub fn f1(&self) -> f64 {
        self.overall.f1
    }

    pub fn token_f1(&self) -> f64 {
        self.token.f1
    }

    /// Machine-readable key=value lines at full precision.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        push("tokens", self.tokens.to_string());
        push("accuracy", self.accuracy.to_string());
        for (name, s) in [("overall", &self.overall), ("token", &self.token)] {
            push(&format!("{name}.tp"), s.tp.to_string());
            push(&format!("{name}.fp"), s.fp.to_string());
            push(&format!("{name}.fn"), s.fn_.to_string());
            push(&format!("{name}.precision"), s.precision.to_string());
            push(&format!("{name}.recall"), s.recall.to_string());
            push(&format!("{name}.f1"), s.f1.to_string());
        }
        for (ty, s) in &self.per_type {
            push(&format!("type.{ty}.tp"), s.tp.to_string());
            push(&format!("type.{ty}.fp"), s.fp.to_string());
            push(&format!("type.{ty}.fn"), s.fn_.to_string());
            push(&format!("type.{ty}.precision"), s.precision.to_string());
            push(&format!("type.{ty}.recall"), s.recall.to_string());
            push(&format!("type.{ty}.f1"), s.f1.to_string());
        }
        out
    }
}

fn pct(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "processed {} tokens with {} phrases; found: {} phrases; correct: {}.",
            self.tokens,
            self.overall.tp + self.overall.fn_,
            self.overall.tp + self.overall.fp,
            self.overall.tp
        )?;
        writeln!(
            f,
            "accuracy: {:6.2}%; precision: {:6.2}%; recall: {:6.2}%; FB1: {:6.2}",
            pct(self.accuracy),
            pct(self.overall.precision),
            pct(self.overall.recall),
            pct(self.overall.f1)
        )?;
        writeln!(
            f,
            "token-based: precision: {:6.2}%; recall: {:6.2}%; FB1: {:6.2}",
            pct(self.token.precision),
            pct(self.token.recall),
            pct(self.token.f1)
        )?;
        for (ty, s) in &self.per_type {
            writeln!(
                f,
                "{ty:>17}: precision: {:6.2}%; recall: {:6.2}%; FB1: {:6.2}  {}",
                pct(s.precision),
                pct(s.recall),
                pct(s.f1),
                s.tp + s.fp
            )?;
        }
        Ok(())
    }
}

/// Per-token entity types implied by the repaired span decoding; `None`
/// marks an outside token.
fn token_types(labels: &[String], scheme: TagScheme) -> Vec<Option<String>> {
    let mut types = vec![None; labels.len()];
    for span in decode_labels(labels, scheme) {
        for slot in types.iter_mut().take(span.end + 1).skip(span.start) {
            *slot = Some(span.etype.clone());
        }
    }
    types
}

/// Scores predicted label sequences against gold. Both streams go through
/// the same repairing decoder the codec uses.
pub fn evaluate(
    gold: &[Vec<String>],
    pred: &[Vec<String>],
    scheme: TagScheme,
) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::invalid(format!(
            "gold has {} sentences, predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut phrase: BTreeMap<String, (u64, u64, u64)> = BTreeMap::new();
    let mut token: BTreeMap<String, (u64, u64, u64)> = BTreeMap::new();
    let mut tokens = 0u64;
    let mut type_matches = 0u64;

    for (idx, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::invalid(format!(
                "sentence {idx}: gold has {} tokens, prediction has {}",
                g.len(),
                p.len()
            )));
        }
        let gold_spans = decode_labels(g, scheme);
        let pred_spans = decode_labels(p, scheme);
        for span in &pred_spans {
            let entry = phrase.entry(span.etype.clone()).or_default();
            if gold_spans.contains(span) {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
        for span in &gold_spans {
            if !pred_spans.contains(span) {
                phrase.entry(span.etype.clone()).or_default().2 += 1;
            }
        }

        let gold_types = token_types(g, scheme);
        let pred_types = token_types(p, scheme);
        tokens += g.len() as u64;
        for (gt, pt) in gold_types.iter().zip(&pred_types) {
            if gt == pt {
                type_matches += 1;
            }
            match (gt, pt) {
                (Some(gt), Some(pt)) if gt == pt => {
                    token.entry(gt.clone()).or_default().0 += 1;
                }
                (gt, pt) => {
                    if let Some(pt) = pt {
                        token.entry(pt.clone()).or_default().1 += 1;
                    }
                    if let Some(gt) = gt {
                        token.entry(gt.clone()).or_default().2 += 1;
                    }
                }
            }
        }
    }

    let fold = |counts: &BTreeMap<String, (u64, u64, u64)>| {
        counts
            .values()
            .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2))
    };
    let (tp, fp, fn_) = fold(&phrase);
    let (ttp, tfp, tfn) = fold(&token);
    Ok(EvalReport {
        overall: Score::from_counts(tp, fp, fn_),
        per_type: phrase
            .into_iter()
            .map(|(ty, (tp, fp, fn_))| (ty, Score::from_counts(tp, fp, fn_)))
            .collect(),
        token: Score::from_counts(ttp, tfp, tfn),
        token_per_type: token
            .into_iter()
            .map(|(ty, (tp, fp, fn_))| (ty, Score::from_counts(tp, fp, fn_)))
            .collect(),
        accuracy: if tokens > 0 {
            100.0 * type_matches as f64 / tokens as f64
        } else {
            0.0
        },
        tokens,
    })
}

/// Applies a type remap (`FROM -> TO`, `TO` may be `O`) to a label sequence.
pub fn remap_labels(labels: &[String], map: &BTreeMap<String, String>) -> Vec<String> {
    labels
        .iter()
        .map(|label| {
            let Some((prefix, ty)) = label.split_once('-') else {
                return label.clone();
            };
            match map.get(ty) {
                Some(to) if to == "O" => "O".to_string(),
                Some(to) => format!("{prefix}-{to}"),
                None => label.clone(),
            }
        })
        .collect()
}

/// Gold label sequences of a corpus, converted to `scheme`.
pub fn gold_labels(corpus: &Corpus, scheme: TagScheme) -> Result<Vec<Vec<String>>> {
    let from = detect_scheme(corpus);
    corpus
        .sentences()
        .map(|s| {
            s.gold
                .as_ref()
                .map(|g| convert_scheme(g, from, scheme))
                .ok_or_else(|| Error::invalid("corpus has unlabeled sentences"))
        })
        .collect()
}

/// Tags `test` with the model and scores against its gold labels.
pub fn evaluate_model(model: &PerceptronModel, test: &Corpus) -> Result<EvalReport> {
    let scheme = model.config.scheme;
    let gold = gold_labels(test, scheme)?;
    let pred = model.tag_corpus(test);
    evaluate(&gold, &pred, scheme)
}

#[derive(Debug, Clone)]
pub struct CurveRow {
    pub fraction: f64,
    pub token_count: usize,
    pub local: EvalReport,
    pub full: EvalReport,
    pub delta_f1: f64,
}

#[derive(Debug, Clone, Default)]
pub struct CurveReport {
    pub rows: Vec<CurveRow>,
}

impl fmt::Display for CurveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>10} {:>10} {:>8} {:>8} {:>8}",
            "fraction", "tokens", "local", "full", "delta"
        )?;
        for row in &self.rows {
            writeln!(
                f,
                "{:>10.4} {:>10} {:>8.2} {:>8.2} {:>8.2}",
                row.fraction,
                row.token_count,
                pct(row.local.overall.f1),
                pct(row.full.overall.f1),
                pct(row.delta_f1)
            )?;
        }
        Ok(())
    }
}

/// For each training fraction, trains the local and the full configuration
/// on the same contiguous prefix and scores both on the fixed test set.
pub fn learning_curve(
    train_corpus: &Corpus,
    test_corpus: &Corpus,
    fractions: &[f64],
    local_config: &FeatureConfig,
    full_config: &FeatureConfig,
    opts: &TrainOptions,
) -> Result<CurveReport> {
    let mut fractions: Vec<f64> = fractions.to_vec();
    fractions.sort_by(|a, b| a.partial_cmp(b).expect("finite fractions"));
    let mut rows = Vec::new();
    for fraction in fractions {
        let part = split_fraction(train_corpus, fraction)?;
        let local = train(&part, local_config.clone(), opts)?.model;
        let full = train(&part, full_config.clone(), opts)?.model;
        let local_report = evaluate_model(&local, test_corpus)?;
        let full_report = evaluate_model(&full, test_corpus)?;
        let delta_f1 = full_report.overall.f1 - local_report.overall.f1;
        rows.push(CurveRow {
            fraction,
            token_count: part.token_count(),
            local: local_report,
            full: full_report,
            delta_f1,
        });
    }
    Ok(CurveReport { rows })
}
