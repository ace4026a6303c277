//! Precision/recall scoring against a gold alignment, synthetic corpora with
//! injected address errors, and method comparison.

mod compare;
mod corpus;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{comparison_tsv, compare_methods, manual_review_queue, simulate_manual, ComparisonRow, MethodSpec, OperatorModel};
pub use corpus::{generate_corpus, oracle_links, Corpus, CorpusRecord, CorpusSpec, ErrorKind, RecordKind, MUNICIPALITIES};

use crate::quadstore::Iri;
use crate::reconciler::{Level, MatchCandidate, Method};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid corpus spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GoldEntry {
    pub road: Iri,
    pub street_number: Option<Iri>,
    pub level: Level,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAlignment {
    pub entries: BTreeMap<Iri, GoldEntry>,
}

fn parse_level(s: &str) -> Option<Level> {
    match s {
        "number" => Some(Level::Number),
        "street" => Some(Level::Street),
        _ => None,
    }
}

fn parse_optional_iri(s: &str) -> Result<Option<Iri>, String> {
    match s {
        "-" | "\u{2212}" => Ok(None),
        other => Iri::new(other).map(Some).map_err(|e| e.to_string()),
    }
}

impl GoldAlignment {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `serviceIri<TAB>roadIri<TAB>streetNumberIri|-<TAB>level` per line.
    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|(s, e)| {
                format!(
                    "{s}\t{}\t{}\t{}\n",
                    e.road,
                    e.street_number.as_ref().map(Iri::as_str).unwrap_or("-"),
                    e.level.as_str()
                )
            })
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self, EvalError> {
        let mut gold = GoldAlignment::default();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: String| EvalError::Parse { line: idx + 1, reason };
            let cols: Vec<&str> = line.split('\t').collect();
            let [service, road, number, level] = cols[..] else {
                return Err(err(format!("expected 4 columns, found {}", cols.len())));
            };
            let service = Iri::new(service).map_err(|e| err(e.to_string()))?;
            let entry = GoldEntry {
                road: Iri::new(road).map_err(|e| err(e.to_string()))?,
                street_number: parse_optional_iri(number).map_err(err)?,
                level: parse_level(level).ok_or_else(|| err(format!("unknown level {level:?}")))?,
            };
            if gold.entries.insert(service.clone(), entry).is_some() {
                return Err(err(format!("duplicate gold entry for {service}")));
            }
        }
        Ok(gold)
    }
}

fn parse_method(s: &str) -> Option<Method> {
    Some(match s {
        "exact1" => Method::Exact1,
        "exact2" => Method::Exact2,
        "exact3" => Method::Exact3,
        "levenshtein" => Method::Levenshtein,
        "dice" => Method::Dice,
        "jaccard" => Method::Jaccard,
        "kbLevenshtein" => Method::KbLevenshtein,
        "manual" => Method::Manual,
        _ => return None,
    })
}

/// Reads a links file as written by [`MatchCandidate::to_link_line`].
pub fn parse_links(text: &str) -> Result<Vec<MatchCandidate>, EvalError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| EvalError::Parse { line: idx + 1, reason };
        let cols: Vec<&str> = line.split('\t').collect();
        let [service, road, number, level, method, score] = cols[..] else {
            return Err(err(format!("expected 6 columns, found {}", cols.len())));
        };
        out.push(MatchCandidate {
            service: Iri::new(service).map_err(|e| err(e.to_string()))?,
            road: Iri::new(road).map_err(|e| err(e.to_string()))?,
            street_number: parse_optional_iri(number).map_err(err)?,
            entry: None,
            level: parse_level(level).ok_or_else(|| err(format!("unknown level {level:?}")))?,
            method: parse_method(method).ok_or_else(|| err(format!("unknown method {method:?}")))?,
            score: score.parse().map_err(|_| err(format!("bad score {score:?}")))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
    /// Set when there were no predictions and precision was defined as 0.
    pub no_predictions: bool,
    /// tp/fp by predicted level, fn by gold level.
    pub by_level: BTreeMap<String, ConfusionCounts>,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// True when a predicted link agrees with the gold entry: same road and,
/// for number-level predictions, the same street number.
pub fn is_correct(link: &MatchCandidate, gold: &GoldEntry) -> bool {
    link.road == gold.road && (link.level == Level::Street || link.street_number == gold.street_number)
}

/// Scores predicted links. A link is a true positive when it agrees with
/// the gold entry of its service, otherwise a false positive; a gold entry
/// without any true positive is a false negative, so `tp + fn` is the
/// number of gold entries.
pub fn score(predicted: &[MatchCandidate], gold: &GoldAlignment) -> MetricsReport {
    let unique: BTreeSet<(&Iri, &Iri, Option<&Iri>, Level)> = predicted
        .iter()
        .map(|l| (&l.service, &l.road, l.street_number.as_ref(), l.level))
        .collect();
    let mut counts = ConfusionCounts::default();
    let mut by_level: BTreeMap<String, ConfusionCounts> = BTreeMap::new();
    let mut found: BTreeSet<&Iri> = BTreeSet::new();
    for &(service, road, number, level) in &unique {
        let link = MatchCandidate {
            service: service.clone(),
            road: road.clone(),
            street_number: number.cloned(),
            entry: None,
            level,
            method: Method::Manual,
            score: 1.0,
        };
        let slot = by_level.entry(level.as_str().to_string()).or_default();
        if gold.entries.get(service).is_some_and(|g| is_correct(&link, g)) {
            counts.tp += 1;
            slot.tp += 1;
            found.insert(service);
        } else {
            counts.fp += 1;
            slot.fp += 1;
        }
    }
    for (service, entry) in &gold.entries {
        if !found.contains(service) {
            counts.fn_ += 1;
            by_level.entry(entry.level.as_str().to_string()).or_default().fn_ += 1;
        }
    }
    // Several correct links for one service count once towards recall.
    let recalled = found.len() as f64;
    let no_predictions = unique.is_empty();
    let precision = if no_predictions {
        0.0
    } else {
        counts.tp as f64 / (counts.tp + counts.fp) as f64
    };
    let recall = if gold.is_empty() {
        0.0
    } else {
        recalled / gold.len() as f64
    };
    MetricsReport {
        precision,
        recall,
        f1: f1(precision, recall),
        counts,
        no_predictions,
        by_level,
    }
}
