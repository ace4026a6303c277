//! Links Service instances to street-guide roads and street numbers.
//!
//! Exact reconciliation runs three steps (light match on official or
//! alternative name, match after full normalisation, unique last word),
//! first at street-number level and then at street level. Link discovery
//! scores every road of the service's municipality with a string metric
//! combined with the location match.

mod catalog;
pub mod metrics;
mod store_io;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{CatalogNumber, CatalogRoad, ToponymCatalog};
pub use store_io::{
    catalog_from_store, catalog_quads, municipality_iri_for, parse_services_tsv, service_quads, services_from_store,
    services_tsv,
};
pub use metrics::{
    dice, jaccard, levenshtein, levenshtein_similarity, levenshtein_similarity_within, levenshtein_within, similarity, Metric,
};

use crate::address::{light, municipality_key, name_orderings, normalize, RawAddress};
use crate::quadstore::{GeoPoint, Iri, Quad, QuadStore, StoreError, DataKind};
use crate::schema::MacroClass;
use crate::vocab;

#[derive(Debug, Error)]
pub enum ReconcileError {
    #[error("{service} already has access {existing}; refusing a second one")]
    AccessConflict { service: Iri, existing: Iri },
    #[error("number-level candidate for {0} carries no street number entry")]
    MissingEntry(Iri),
    #[error("invalid method configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetService {
    pub iri: Iri,
    pub address: RawAddress,
    pub coordinates: Option<GeoPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Level {
    Number,
    Street,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Number => "number",
            Level::Street => "street",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Method {
    Exact1,
    Exact2,
    Exact3,
    Levenshtein,
    Dice,
    Jaccard,
    KbLevenshtein,
    Manual,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact1 => "exact1",
            Method::Exact2 => "exact2",
            Method::Exact3 => "exact3",
            Method::Levenshtein => "levenshtein",
            Method::Dice => "dice",
            Method::Jaccard => "jaccard",
            Method::KbLevenshtein => "kbLevenshtein",
            Method::Manual => "manual",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Method::Exact1 | Method::Exact2 | Method::Exact3)
    }
}

impl From<Metric> for Method {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Levenshtein => Method::Levenshtein,
            Metric::Dice => Method::Dice,
            Metric::Jaccard => Method::Jaccard,
            Metric::KbLevenshtein => Method::KbLevenshtein,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchCandidate {
    pub service: Iri,
    pub road: Iri,
    pub street_number: Option<Iri>,
    /// Entry giving access to `street_number`.
    pub entry: Option<Iri>,
    pub level: Level,
    pub method: Method,
    pub score: f64,
}

impl MatchCandidate {
    /// The toponym the service location is declared sameAs.
    pub fn toponym(&self) -> &Iri {
        self.street_number.as_ref().unwrap_or(&self.road)
    }

    /// `serviceIri<TAB>roadIri<TAB>streetNumberIri|-<TAB>level<TAB>method<TAB>score`
    pub fn to_link_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.service,
            self.road,
            self.street_number.as_ref().map(Iri::as_str).unwrap_or("-"),
            self.level.as_str(),
            self.method.as_str(),
            self.score
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MethodConfig {
    pub metric: Metric,
    pub street_edit_max: usize,
    pub location_weight: f64,
    pub street_weight: f64,
    pub accept_threshold: f64,
    pub review_threshold: f64,
    pub tie_gap: f64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        MethodConfig {
            metric: Metric::Levenshtein,
            street_edit_max: 5,
            location_weight: 0.5,
            street_weight: 0.5,
            accept_threshold: 0.95,
            review_threshold: 0.60,
            tie_gap: 0.05,
        }
    }
}

impl MethodConfig {
    pub fn with_metric(metric: Metric) -> Self {
        MethodConfig {
            metric,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ReconcileError> {
        let ok = 0.0 <= self.review_threshold
            && self.review_threshold <= self.accept_threshold
            && self.accept_threshold <= 1.0
            && self.location_weight >= 0.0
            && self.street_weight >= 0.0
            && self.location_weight + self.street_weight > 0.0
            && self.tie_gap >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(ReconcileError::Config(format!("{self:?}")))
        }
    }

    fn score(&self, street_similarity: f64) -> f64 {
        (self.location_weight + self.street_weight * street_similarity) / (self.location_weight + self.street_weight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ReviewState {
    Pending,
    Accepted,
    Rejected,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReviewItem {
    pub id: u64,
    pub service: Iri,
    pub candidates: Vec<MatchCandidate>,
    pub state: ReviewState,
    /// Index into `candidates` of the accepted candidate.
    pub chosen: Option<usize>,
    pub decided_by: Option<String>,
    pub decided_at: Option<DateTime<Utc>>,
}

impl ReviewItem {
    pub fn pending(service: Iri, candidates: Vec<MatchCandidate>) -> Self {
        ReviewItem {
            id: 0,
            service,
            candidates,
            state: ReviewState::Pending,
            chosen: None,
            decided_by: None,
            decided_at: None,
        }
    }

    pub fn top_score(&self) -> f64 {
        self.candidates.first().map_or(0.0, |c| c.score)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    AutoAccept(MatchCandidate),
    Review(ReviewItem),
    NoMatch,
}

fn exact_candidate(
    service: &TargetService,
    catalog: &ToponymCatalog,
    road: usize,
    method: Method,
    civics: Option<&[crate::address::CivicNumber]>,
) -> Option<MatchCandidate> {
    let r = catalog.road(road);
    let (level, number) = match civics {
        Some(civics) => (Level::Number, Some(catalog.find_number(road, civics)?)),
        None => (Level::Street, None),
    };
    Some(MatchCandidate {
        service: service.iri.clone(),
        road: r.iri.clone(),
        street_number: number.map(|n| n.iri.clone()),
        entry: number.map(|n| n.entry.clone()),
        level,
        method,
        score: 1.0,
    })
}

fn unique(mut roads: Vec<usize>) -> Option<usize> {
    roads.sort_unstable();
    roads.dedup();
    match roads[..] {
        [one] => Some(one),
        _ => None,
    }
}

/// Three-step exact reconciliation, number level first, then street level.
pub fn reconcile_exact(service: &TargetService, catalog: &ToponymCatalog) -> Option<MatchCandidate> {
    let table = catalog.table();
    let block = catalog.block(&municipality_key(&service.address.municipality));
    if block.is_empty() {
        return None;
    }
    let normalized = normalize(&service.address, table);
    let light_street = light(&service.address.street_text);
    let full_street = normalized.street();
    let matching = |pred: &dyn Fn(&catalog::PreparedName) -> bool| -> Option<usize> {
        unique(block.iter().copied().filter(|&i| catalog.names(i).iter().any(pred)).collect())
    };
    let steps: [(Method, Option<usize>); 3] = [
        (Method::Exact1, matching(&|n| !light_street.is_empty() && n.light == light_street)),
        (Method::Exact2, matching(&|n| !full_street.is_empty() && n.street == full_street)),
        (
            Method::Exact3,
            matching(&|n| !normalized.last_word_key.is_empty() && n.normalized.last_word_key == normalized.last_word_key),
        ),
    ];
    let civics = Some(normalized.civics.as_slice());
    for level_civics in [civics, None] {
        for &(method, road) in &steps {
            if let Some(c) = road.and_then(|r| exact_candidate(service, catalog, r, method, level_civics)) {
                return Some(c);
            }
        }
    }
    None
}

/// Street similarity and edit distance between the service street and one
/// road name under `metric`, or None beyond `max` edits.
fn street_score(
    metric: Metric,
    max: usize,
    service_light: &str,
    service: &crate::address::NormalizedAddress,
    name: &catalog::PreparedName,
) -> Option<(f64, usize)> {
    match metric {
        Metric::Levenshtein => levenshtein_similarity_within(service_light, &name.light, max),
        Metric::Jaccard => levenshtein_within(service_light, &name.light, max)
            .map(|d| (jaccard(service_light, &name.light), d)),
        Metric::Dice => levenshtein_within(service_light, &name.light, max)
            .map(|d| (dice(&service.name(), &name.normalized.name()), d)),
        Metric::KbLevenshtein => name_orderings(service)
            .into_iter()
            .filter_map(|tokens| {
                let street = service.qualifier.iter().chain(&tokens).cloned().collect::<Vec<_>>().join(" ");
                levenshtein_similarity_within(&street, &name.street, max)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1))),
    }
}

/// Scores every road of the service's municipality; roads further than
/// `street_edit_max` edits are dropped. Best first.
pub fn link_discover(service: &TargetService, catalog: &ToponymCatalog, cfg: &MethodConfig) -> Vec<MatchCandidate> {
    let mut key = municipality_key(&service.address.municipality);
    if cfg.metric == Metric::KbLevenshtein {
        key = catalog.resolve_alias(&key).to_string();
    }
    let normalized = normalize(&service.address, catalog.table());
    let service_light = light(&service.address.street_text);
    let mut out: Vec<MatchCandidate> = catalog
        .block(&key)
        .iter()
        .filter_map(|&i| {
            let (sim, _) = catalog
                .names(i)
                .iter()
                .filter_map(|n| street_score(cfg.metric, cfg.street_edit_max, &service_light, &normalized, n))
                .max_by(|a, b| a.0.total_cmp(&b.0))?;
            let number = catalog.find_number(i, &normalized.civics);
            Some(MatchCandidate {
                service: service.iri.clone(),
                road: catalog.road(i).iri.clone(),
                street_number: number.map(|n| n.iri.clone()),
                entry: number.map(|n| n.entry.clone()),
                level: if number.is_some() { Level::Number } else { Level::Street },
                method: cfg.metric.into(),
                score: cfg.score(sim),
            })
        })
        .collect();
    rank(&mut out);
    out
}

/// Sorts candidates by descending score, number level first, then road IRI.
pub fn rank(candidates: &mut [MatchCandidate]) {
    candidates.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.level.cmp(&b.level))
            .then_with(|| a.road.cmp(&b.road))
    });
}

/// Routes ranked candidates: accept a clear winner above the accept
/// threshold, queue anything else above the review threshold.
pub fn decide(service: &Iri, candidates: &[MatchCandidate], cfg: &MethodConfig) -> Decision {
    let Some(top) = candidates.first() else {
        return Decision::NoMatch;
    };
    let clear = candidates.get(1).is_none_or(|second| top.score - second.score >= cfg.tie_gap);
    if top.score >= cfg.accept_threshold && clear {
        Decision::AutoAccept(top.clone())
    } else if top.score >= cfg.review_threshold {
        Decision::Review(ReviewItem::pending(service.clone(), candidates.to_vec()))
    } else {
        Decision::NoMatch
    }
}

/// IRI standing for the location of a service in sameAs links.
pub fn location_iri(service: &Iri) -> Iri {
    Iri::new(format!("{service}/location")).expect("suffixing a valid IRI keeps it valid")
}

pub fn reconciliation_context(base: &str) -> Iri {
    Iri::new(format!("{base}/reconciliation")).expect("base must be a valid IRI")
}

/// Quads materialising an accepted candidate: the location sameAs the
/// toponym plus hasAccess (number level) or isInRoad (street level).
pub fn decision_quads(candidate: &MatchCandidate, ctx: &Iri) -> Result<[Quad; 2], ReconcileError> {
    let km4c = |l: &str| Iri::new(vocab::km4c(l)).unwrap();
    let same_as = Quad::new(
        location_iri(&candidate.service),
        Iri::new(vocab::OWL_SAME_AS).unwrap(),
        candidate.toponym().clone(),
        ctx.clone(),
    );
    let typed = match candidate.level {
        Level::Number => {
            let entry = candidate
                .entry
                .clone()
                .ok_or_else(|| ReconcileError::MissingEntry(candidate.service.clone()))?;
            Quad::new(candidate.service.clone(), km4c("hasAccess"), entry, ctx.clone())
        }
        Level::Street => Quad::new(candidate.service.clone(), km4c("isInRoad"), candidate.road.clone(), ctx.clone()),
    };
    Ok([same_as, typed])
}

/// Writes an accepted candidate into `ctx`, tagging it as point-of-interest
/// reconciliation data. Returns the quads that were not already stored; a
/// second, different access for the same service is refused.
pub fn apply_decision(store: &mut QuadStore, candidate: &MatchCandidate, ctx: &Iri) -> Result<Vec<Quad>, ReconcileError> {
    let quads = decision_quads(candidate, ctx)?;
    if candidate.level == Level::Number {
        let has_access = &quads[1].predicate;
        if let Some(existing) = store
            .matches(Some(&candidate.service), Some(has_access), None, None)
            .into_iter()
            .find(|q| q.object != quads[1].object)
        {
            return Err(ReconcileError::AccessConflict {
                service: candidate.service.clone(),
                existing: existing.object.as_iri().cloned().unwrap_or_else(|| existing.subject.clone()),
            });
        }
    }
    if store.context_tag(ctx).is_none() {
        store.tag_context(ctx, MacroClass::PointOfInterest, DataKind::Reconciliation)?;
    }
    let fresh: Vec<Quad> = quads.into_iter().filter(|q| !store.contains(q)).collect();
    store.insert(&fresh)?;
    Ok(fresh)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Strategy {
    Exact,
    Discover(Metric),
}

impl Strategy {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "exact" => Strategy::Exact,
            "levenshtein" => Strategy::Discover(Metric::Levenshtein),
            "dice" => Strategy::Discover(Metric::Dice),
            "jaccard" => Strategy::Discover(Metric::Jaccard),
            "kb-levenshtein" | "kbLevenshtein" => Strategy::Discover(Metric::KbLevenshtein),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunSummary {
    pub services: usize,
    pub number_level: usize,
    pub street_level: usize,
    pub auto_accepted: usize,
    pub review: usize,
    pub no_match: usize,
    /// Services left without a link or review item that do have coordinates.
    pub unresolved_with_coordinates: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusRun {
    pub links: Vec<MatchCandidate>,
    pub review_queue: Vec<ReviewItem>,
    /// Services that got neither a link nor a review item.
    pub unmatched: Vec<Iri>,
    pub summary: RunSummary,
}

/// Runs one strategy over all services (in parallel). Output order follows
/// the input order; review items are numbered from 1.
pub fn reconcile_corpus(
    services: &[TargetService],
    catalog: &ToponymCatalog,
    strategy: Strategy,
    cfg: &MethodConfig,
) -> CorpusRun {
    let decisions: Vec<Decision> = services
        .par_iter()
        .map(|s| match strategy {
            Strategy::Exact => reconcile_exact(s, catalog).map_or(Decision::NoMatch, Decision::AutoAccept),
            Strategy::Discover(metric) => {
                let cfg = MethodConfig { metric, ..cfg.clone() };
                decide(&s.iri, &link_discover(s, catalog, &cfg), &cfg)
            }
        })
        .collect();
    let mut run = CorpusRun::default();
    run.summary.services = services.len();
    for (service, decision) in services.iter().zip(decisions) {
        match decision {
            Decision::AutoAccept(c) => {
                run.summary.auto_accepted += 1;
                match c.level {
                    Level::Number => run.summary.number_level += 1,
                    Level::Street => run.summary.street_level += 1,
                }
                run.links.push(c);
            }
            Decision::Review(mut item) => {
                run.summary.review += 1;
                item.id = run.review_queue.len() as u64 + 1;
                run.review_queue.push(item);
            }
            Decision::NoMatch => {
                run.summary.no_match += 1;
                if service.coordinates.is_some() {
                    run.summary.unresolved_with_coordinates += 1;
                }
                run.unmatched.push(service.iri.clone());
            }
        }
    }
    run
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::address::{CivicNumber, QualifierTable};

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://x/{s}")).unwrap()
    }

    fn road(id: &str, town: &str, name: &str, numbers: &[CivicNumber]) -> CatalogRoad {
        CatalogRoad {
            iri: iri(id),
            municipality: town.into(),
            official_name: name.into(),
            alternative_name: None,
            street_numbers: numbers
                .iter()
                .map(|c| CatalogNumber {
                    iri: iri(&format!("{id}/sn/{c}")),
                    entry: iri(&format!("{id}/entry/{c}")),
                    civic: c.clone(),
                })
                .collect(),
        }
    }

    fn service(street: &str, civic: &str, town: &str) -> TargetService {
        TargetService {
            iri: iri("svc"),
            address: RawAddress::new(street, civic, town),
            coordinates: None,
        }
    }

    fn catalog() -> ToponymCatalog {
        ToponymCatalog::new(
            vec![
                road("vigna", "FIRENZE", "VIA DELLA VIGNA NUOVA", &[CivicNumber::red(40), CivicNumber::black(40)]),
                road("duomo", "FIRENZE", "PIAZZA DUOMO", &[]),
                road("nuova", "FIRENZE", "VIA NUOVA", &[]),
                road("petrarca", "FIRENZE", "VIA FRANCESCO PETRARCA", &[]),
            ],
            QualifierTable::seed(),
        )
    }

    #[test]
    fn exact_number_level_with_red_civic() {
        let c = reconcile_exact(&service("VIA DELLA VIGNA NUOVA", "40/R-42/R", "FIRENZE"), &catalog()).unwrap();
        assert_eq!((c.level, c.method, c.score), (Level::Number, Method::Exact1, 1.0));
        assert_eq!(c.street_number, Some(iri("vigna/sn/40/R")));
    }

    #[test]
    fn exact_steps() {
        let c = reconcile_exact(&service("P.ZZA DUOMO", "", "Firenze"), &catalog()).unwrap();
        assert_eq!((c.method, c.level), (Method::Exact2, Level::Street));
        // "NUOVA" is the last word of two roads.
        assert!(reconcile_exact(&service("V. NUOVA", "", "FIRENZE"), &catalog()).is_none());
        assert!(reconcile_exact(&service("VIA DUOMO", "", "PRATO"), &catalog()).is_none());
    }

    #[test]
    fn kb_levenshtein_handles_name_swaps() {
        let s = service("VIA PETRARCA FRANCESCO", "", "FIRENZE");
        let lev = link_discover(&s, &catalog(), &MethodConfig::default());
        let kb = link_discover(&s, &catalog(), &MethodConfig::with_metric(Metric::KbLevenshtein));
        assert!(lev.iter().all(|c| c.road != iri("petrarca") || c.score < 0.95));
        assert_eq!(kb[0].road, iri("petrarca"));
        assert_eq!(kb[0].score, 1.0);
    }

    #[test]
    fn edit_bound_and_blocking() {
        let cfg = MethodConfig {
            street_edit_max: 5,
            ..MethodConfig::default()
        };
        // PIAZZA DUOMO -> PIAZZA DUOMOXXXXXX is six insertions
        let s = service("PIAZZA DUOMOXXXXXX", "", "FIRENZE");
        assert!(link_discover(&s, &catalog(), &cfg).iter().all(|c| c.road != iri("duomo")));
        let s = service("PIAZZA DUOMOXXXXX", "", "FIRENZE");
        assert!(link_discover(&s, &catalog(), &cfg).iter().any(|c| c.road == iri("duomo")));
        assert!(link_discover(&service("PIAZZA DUOMO", "", "PRATO"), &catalog(), &cfg).is_empty());
    }

    fn cand(road: &str, score: f64) -> MatchCandidate {
        MatchCandidate {
            service: iri("svc"),
            road: iri(road),
            street_number: None,
            entry: None,
            level: Level::Street,
            method: Method::Levenshtein,
            score,
        }
    }

    #[test]
    fn decision_routing() {
        let cfg = MethodConfig::default();
        assert!(matches!(decide(&iri("svc"), &[cand("a", 1.0)], &cfg), Decision::AutoAccept(_)));
        assert!(matches!(decide(&iri("svc"), &[cand("a", 0.97), cand("b", 0.97)], &cfg), Decision::Review(_)));
        assert!(matches!(decide(&iri("svc"), &[cand("a", 0.4)], &cfg), Decision::NoMatch));
        assert!(matches!(decide(&iri("svc"), &[], &cfg), Decision::NoMatch));
    }

    #[test]
    fn applying_decisions() {
        let mut store = QuadStore::new();
        let ctx = reconciliation_context("http://x");
        let mut number = cand("vigna", 1.0);
        number.level = Level::Number;
        number.street_number = Some(iri("vigna/sn/40"));
        number.entry = Some(iri("vigna/entry/40"));
        assert_eq!(apply_decision(&mut store, &number, &ctx).unwrap().len(), 2);
        assert!(apply_decision(&mut store, &number, &ctx).unwrap().is_empty());
        let mut other = number.clone();
        other.entry = Some(iri("vigna/entry/42"));
        assert!(matches!(apply_decision(&mut store, &other, &ctx), Err(ReconcileError::AccessConflict { .. })));
        assert_eq!(apply_decision(&mut store, &cand("duomo", 0.96), &ctx).unwrap().len(), 2);
        assert_eq!(store.resolve(&location_iri(&iri("svc"))).len(), 3);
        assert_eq!(store.context_tag(&ctx).unwrap().kind, DataKind::Reconciliation);
    }

    #[test]
    fn empty_corpus() {
        let run = reconcile_corpus(&[], &catalog(), Strategy::Exact, &MethodConfig::default());
        assert_eq!(run.summary, RunSummary::default());
    }
}
