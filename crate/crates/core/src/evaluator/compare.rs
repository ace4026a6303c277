use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{is_correct, score, ConfusionCounts, Corpus, GoldAlignment};
use crate::reconciler::{
    link_discover, reconcile_corpus, MatchCandidate, Method, MethodConfig, Metric, ReviewItem, Strategy,
    TargetService, ToponymCatalog,
};
use crate::quadstore::Iri;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MethodSpec {
    Exact,
    /// Exact reconciliation followed by a simulated operator working the
    /// review queue of the unmatched services.
    ExactManual,
    Discover(Metric),
}

impl MethodSpec {
    pub const ALL: [MethodSpec; 6] = [
        MethodSpec::Exact,
        MethodSpec::ExactManual,
        MethodSpec::Discover(Metric::Levenshtein),
        MethodSpec::Discover(Metric::Dice),
        MethodSpec::Discover(Metric::Jaccard),
        MethodSpec::Discover(Metric::KbLevenshtein),
    ];

    pub fn label(self) -> &'static str {
        match self {
            MethodSpec::Exact => "exact",
            MethodSpec::ExactManual => "exact+manual",
            MethodSpec::Discover(Metric::Levenshtein) => "levenshtein",
            MethodSpec::Discover(Metric::Dice) => "dice",
            MethodSpec::Discover(Metric::Jaccard) => "jaccard",
            MethodSpec::Discover(Metric::KbLevenshtein) => "kbLevenshtein",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(MethodSpec::Exact),
            "exact+manual" | "manual" => Some(MethodSpec::ExactManual),
            other => match Strategy::parse(other)? {
                Strategy::Exact => Some(MethodSpec::Exact),
                Strategy::Discover(m) => Some(MethodSpec::Discover(m)),
            },
        }
    }
}

/// Simulated reviewer: picks the gold candidate with probability
/// `accuracy`, otherwise errs by accepting the best wrong candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct OperatorModel {
    pub accuracy: f64,
    pub seed: u64,
    /// Candidates shown per review item.
    pub shown: usize,
}

impl Default for OperatorModel {
    fn default() -> Self {
        OperatorModel {
            accuracy: 0.95,
            seed: 7,
            shown: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ComparisonRow {
    pub method: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
}

impl ComparisonRow {
    pub fn tsv_header() -> &'static str {
        "method\tprecision\trecall\tf1\n"
    }

    pub fn to_tsv_line(&self) -> String {
        format!("{}\t{:.3}\t{:.3}\t{:.3}\n", self.method, self.precision, self.recall, self.f1)
    }
}

/// Review items for every service without a base link: its best
/// knowledge-based candidates scoring at least the review threshold, at most
/// `shown` of them. Items are numbered from `first_id`.
pub fn manual_review_queue(
    services: &[TargetService],
    catalog: &ToponymCatalog,
    base: &[MatchCandidate],
    cfg: &MethodConfig,
    shown: usize,
    first_id: u64,
) -> Vec<ReviewItem> {
    let linked: std::collections::BTreeSet<_> = base.iter().map(|l| &l.service).collect();
    let kb = MethodConfig {
        metric: Metric::KbLevenshtein,
        ..cfg.clone()
    };
    let queue: Vec<(Iri, Vec<MatchCandidate>)> = services
        .par_iter()
        .filter(|s| !linked.contains(&s.iri))
        .map(|s| {
            let mut c = link_discover(s, catalog, &kb);
            c.retain(|c| c.score >= kb.review_threshold);
            c.truncate(shown);
            (s.iri.clone(), c)
        })
        .filter(|(_, c)| !c.is_empty())
        .collect();
    queue
        .into_iter()
        .zip(first_id..)
        .map(|((service, candidates), id)| ReviewItem {
            id,
            ..ReviewItem::pending(service, candidates)
        })
        .collect()
}

/// Links after a simulated manual pass: the operator resolves each item of
/// [`manual_review_queue`] against the gold alignment.
pub fn simulate_manual(
    services: &[TargetService],
    catalog: &ToponymCatalog,
    base: &[MatchCandidate],
    gold: &GoldAlignment,
    cfg: &MethodConfig,
    operator: &OperatorModel,
) -> Vec<MatchCandidate> {
    let queue = manual_review_queue(services, catalog, base, cfg, operator.shown, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(operator.seed);
    let mut links = base.to_vec();
    for item in queue {
        let candidates = item.candidates;
        let entry = gold.entries.get(&item.service);
        let good = candidates.iter().find(|c| entry.is_some_and(|g| is_correct(c, g)));
        let chosen = if rng.gen_bool(operator.accuracy.clamp(0.0, 1.0)) {
            good
        } else {
            candidates.iter().find(|c| entry.is_none_or(|g| !is_correct(c, g)))
        };
        if let Some(c) = chosen {
            links.push(MatchCandidate {
                method: Method::Manual,
                ..c.clone()
            });
        }
    }
    links
}

/// Runs and scores each method on the corpus, in the order given.
pub fn compare_methods(
    corpus: &Corpus,
    methods: &[MethodSpec],
    cfg: &MethodConfig,
    operator: &OperatorModel,
) -> Vec<ComparisonRow> {
    let catalog = corpus.catalog();
    methods
        .par_iter()
        .map(|&m| {
            let links = match m {
                MethodSpec::Exact => reconcile_corpus(&corpus.services, &catalog, Strategy::Exact, cfg).links,
                MethodSpec::ExactManual => {
                    let base = reconcile_corpus(&corpus.services, &catalog, Strategy::Exact, cfg).links;
                    simulate_manual(&corpus.services, &catalog, &base, &corpus.gold, cfg, operator)
                }
                MethodSpec::Discover(metric) => {
                    reconcile_corpus(&corpus.services, &catalog, Strategy::Discover(metric), cfg).links
                }
            };
            let report = score(&links, &corpus.gold);
            ComparisonRow {
                method: m.label().to_string(),
                precision: report.precision,
                recall: report.recall,
                f1: report.f1,
                counts: report.counts,
            }
        })
        .collect()
}

pub fn comparison_tsv(rows: &[ComparisonRow]) -> String {
    std::iter::once(ComparisonRow::tsv_header().to_string())
        .chain(rows.iter().map(ComparisonRow::to_tsv_line))
        .collect()
}
