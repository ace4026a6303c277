use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use km4_core::address::municipality_key;
use km4_core::evaluator::{score, GoldAlignment, MetricsReport};
use km4_core::quadstore::Iri;
use km4_core::reconciler::{MatchCandidate, Method, ReviewItem, ReviewState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReviewError {
    #[error("no review item {0}")]
    NotFound(u64),
    #[error("review item {id} is already {state:?}")]
    Conflict { id: u64, state: ReviewState },
    #[error("review item {id} has no candidate {index}")]
    NoCandidate { id: u64, index: usize },
    #[error("bad filter: {0}")]
    Filter(String),
    #[error("bad cursor {0:?}")]
    Cursor(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "camelCase")]
pub enum Verdict {
    Accept { candidate: usize },
    Reject,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditEntry {
    pub seq: u64,
    pub item_id: u64,
    pub service: Iri,
    #[serde(flatten)]
    pub verdict: Verdict,
    pub operator: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct ReviewFilters {
    pub method: Option<String>,
    pub municipality: Option<String>,
    /// `low-high`, both inclusive.
    pub score_band: Option<String>,
    /// `open` (default: pending then skipped), `pending`, `skipped`,
    /// `accepted`, `rejected` or `all`.
    pub state: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReviewSummary {
    pub id: u64,
    pub service: Iri,
    pub municipality: String,
    pub state: ReviewState,
    pub top_score: f64,
    pub method: Option<Method>,
    pub candidates: Vec<MatchCandidate>,
    pub chosen: Option<usize>,
    pub decided_by: Option<String>,
    pub decided_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ReviewQueueView {
    pub items: Vec<ReviewSummary>,
    pub next_cursor: Option<String>,
    pub filters: ReviewFilters,
    pub pending: usize,
    pub live_metrics: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MetricsView {
    pub current: Option<MetricsReport>,
    pub before_manual: Option<MetricsReport>,
    pub auto_links: usize,
    pub accepted_links: usize,
    pub pending: usize,
    pub skipped: usize,
    pub decided: usize,
}

/// Ordering key of a queue position: open items by ascending top score,
/// skipped ones after them in skip order, closed ones last by id.
type SortKey = (u8, u64, u64);

/// Outcome of one reconciliation run plus the operator decisions taken on
/// its review queue.
#[derive(Debug, Clone, Default)]
pub struct ReviewBook {
    items: BTreeMap<u64, ReviewItem>,
    municipality: BTreeMap<Iri, String>,
    auto: Vec<MatchCandidate>,
    accepted: Vec<MatchCandidate>,
    gold: Option<GoldAlignment>,
    before_manual: Option<MetricsReport>,
    skip_order: BTreeMap<u64, u64>,
    skip_seq: u64,
    audit: Vec<AuditEntry>,
}

fn band(spec: &str) -> Result<(f64, f64), ReviewError> {
    let bad = || ReviewError::Filter(format!("score band {spec:?} is not low-high"));
    let (lo, hi) = spec.split_once('-').ok_or_else(bad)?;
    let (lo, hi): (f64, f64) = (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?);
    if lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

impl ReviewBook {
    pub fn new(
        auto: Vec<MatchCandidate>,
        queue: Vec<ReviewItem>,
        municipality: BTreeMap<Iri, String>,
        gold: Option<GoldAlignment>,
    ) -> Self {
        let before_manual = gold.as_ref().map(|g| score(&auto, g));
        ReviewBook {
            items: queue.into_iter().map(|i| (i.id, i)).collect(),
            municipality,
            auto,
            gold,
            before_manual,
            ..ReviewBook::default()
        }
    }

    /// Keeps the audit trail of a previous book.
    pub fn continuing(mut self, previous: &ReviewBook) -> Self {
        self.audit = previous.audit.clone();
        self
    }

    pub fn item(&self, id: u64) -> Option<&ReviewItem> {
        self.items.get(&id)
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn gold(&self) -> Option<&GoldAlignment> {
        self.gold.as_ref()
    }

    /// Automatic links plus accepted ones.
    pub fn links(&self) -> Vec<MatchCandidate> {
        self.auto.iter().chain(&self.accepted).cloned().collect()
    }

    pub fn live_metrics(&self) -> Option<MetricsReport> {
        self.gold.as_ref().map(|g| score(&self.links(), g))
    }

    fn count(&self, state: ReviewState) -> usize {
        self.items.values().filter(|i| i.state == state).count()
    }

    pub fn metrics(&self) -> MetricsView {
        MetricsView {
            current: self.live_metrics(),
            before_manual: self.before_manual.clone(),
            auto_links: self.auto.len(),
            accepted_links: self.accepted.len(),
            pending: self.count(ReviewState::Pending),
            skipped: self.count(ReviewState::Skipped),
            decided: self.count(ReviewState::Accepted) + self.count(ReviewState::Rejected),
        }
    }

    fn key(&self, item: &ReviewItem) -> SortKey {
        match item.state {
            ReviewState::Pending => (0, item.top_score().to_bits(), item.id),
            ReviewState::Skipped => (1, self.skip_order.get(&item.id).copied().unwrap_or(0), item.id),
            _ => (2, item.id, 0),
        }
    }

    fn encode(key: SortKey) -> String {
        format!("{}.{}.{}", key.0, key.1, key.2)
    }

    fn decode(cursor: &str) -> Result<SortKey, ReviewError> {
        let bad = || ReviewError::Cursor(cursor.to_string());
        let mut parts = cursor.split('.').map(|p| p.parse::<u64>().map_err(|_| bad()));
        let (Some(a), Some(b), Some(c), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad());
        };
        Ok((u8::try_from(a?).map_err(|_| bad())?, b?, c?))
    }

    fn summary(&self, item: &ReviewItem) -> ReviewSummary {
        ReviewSummary {
            id: item.id,
            service: item.service.clone(),
            municipality: self.municipality.get(&item.service).cloned().unwrap_or_default(),
            state: item.state,
            top_score: item.top_score(),
            method: item.candidates.first().map(|c| c.method),
            candidates: item.candidates.clone(),
            chosen: item.chosen,
            decided_by: item.decided_by.clone(),
            decided_at: item.decided_at,
        }
    }

    /// One page of the filtered queue after `cursor`.
    pub fn view(&self, filters: &ReviewFilters, cursor: Option<&str>, limit: usize) -> Result<ReviewQueueView, ReviewError> {
        let states: Vec<ReviewState> = match filters.state.as_deref().unwrap_or("open") {
            "open" => vec![ReviewState::Pending, ReviewState::Skipped],
            "pending" => vec![ReviewState::Pending],
            "skipped" => vec![ReviewState::Skipped],
            "accepted" => vec![ReviewState::Accepted],
            "rejected" => vec![ReviewState::Rejected],
            "all" => vec![ReviewState::Pending, ReviewState::Skipped, ReviewState::Accepted, ReviewState::Rejected],
            other => return Err(ReviewError::Filter(format!("unknown state {other:?}"))),
        };
        let band = filters.score_band.as_deref().map(band).transpose()?;
        let town = filters.municipality.as_deref().map(municipality_key);
        let after = cursor.map(Self::decode).transpose()?;
        let mut rows: Vec<(SortKey, &ReviewItem)> = self
            .items
            .values()
            .filter(|i| states.contains(&i.state))
            .filter(|i| {
                filters
                    .method
                    .as_deref()
                    .is_none_or(|m| i.candidates.first().is_some_and(|c| c.method.as_str() == m))
            })
            .filter(|i| {
                town.as_deref().is_none_or(|t| {
                    self.municipality.get(&i.service).is_some_and(|m| municipality_key(m) == t)
                })
            })
            .filter(|i| band.is_none_or(|(lo, hi)| (lo..=hi).contains(&i.top_score())))
            .map(|i| (self.key(i), i))
            .filter(|(k, _)| after.is_none_or(|a| *k > a))
            .collect();
        rows.sort_by_key(|(k, _)| *k);
        let limit = limit.max(1);
        let next_cursor = (rows.len() > limit).then(|| Self::encode(rows[limit - 1].0));
        rows.truncate(limit);
        Ok(ReviewQueueView {
            items: rows.into_iter().map(|(_, i)| self.summary(i)).collect(),
            next_cursor,
            filters: filters.clone(),
            pending: self.count(ReviewState::Pending),
            live_metrics: self.live_metrics(),
        })
    }

    /// Checks that `verdict` may be applied to item `id` and returns the
    /// candidate an accept would link.
    pub fn check(&self, id: u64, verdict: Verdict) -> Result<Option<MatchCandidate>, ReviewError> {
        let item = self.items.get(&id).ok_or(ReviewError::NotFound(id))?;
        if !matches!(item.state, ReviewState::Pending | ReviewState::Skipped) {
            return Err(ReviewError::Conflict { id, state: item.state });
        }
        match verdict {
            Verdict::Accept { candidate } => item
                .candidates
                .get(candidate)
                .map(|c| Some(MatchCandidate { method: Method::Manual, ..c.clone() }))
                .ok_or(ReviewError::NoCandidate { id, index: candidate }),
            _ => Ok(None),
        }
    }

    /// Records a checked decision and its audit entry.
    pub fn commit(&mut self, id: u64, verdict: Verdict, operator: &str, at: DateTime<Utc>) -> Result<&AuditEntry, ReviewError> {
        let link = self.check(id, verdict)?;
        let item = self.items.get_mut(&id).expect("checked above");
        item.decided_by = Some(operator.to_string());
        item.decided_at = Some(at);
        match verdict {
            Verdict::Accept { candidate } => {
                item.state = ReviewState::Accepted;
                item.chosen = Some(candidate);
                self.accepted.extend(link);
            }
            Verdict::Reject => item.state = ReviewState::Rejected,
            Verdict::Skip => {
                item.state = ReviewState::Skipped;
                self.skip_seq += 1;
                self.skip_order.insert(id, self.skip_seq);
            }
        }
        let service = item.service.clone();
        self.audit.push(AuditEntry {
            seq: self.audit.len() as u64 + 1,
            item_id: id,
            service,
            verdict,
            operator: operator.to_string(),
            at,
        });
        Ok(self.audit.last().expect("just pushed"))
    }
}

#[cfg(test)]
mod tests {
    use km4_core::evaluator::GoldEntry;
    use km4_core::reconciler::Level;

    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://x/{s}")).unwrap()
    }

    fn cand(service: &str, road: &str, score: f64) -> MatchCandidate {
        MatchCandidate {
            service: iri(service),
            road: iri(road),
            street_number: None,
            entry: None,
            level: Level::Street,
            method: Method::KbLevenshtein,
            score,
        }
    }

    fn book() -> ReviewBook {
        let queue = (1..=4u64)
            .map(|i| ReviewItem {
                id: i,
                ..ReviewItem::pending(
                    iri(&format!("s{i}")),
                    vec![cand(&format!("s{i}"), &format!("r{i}"), 0.9 - i as f64 / 10.0), cand(&format!("s{i}"), "bad", 0.5)],
                )
            })
            .collect();
        let mut gold = GoldAlignment::default();
        for i in 0..=4 {
            gold.entries.insert(
                iri(&format!("s{i}")),
                GoldEntry {
                    road: iri(&format!("r{i}")),
                    street_number: None,
                    level: Level::Street,
                },
            );
        }
        let towns = (0..=4).map(|i| (iri(&format!("s{i}")), if i % 2 == 0 { "PRATO" } else { "FIRENZE" }.to_string()));
        ReviewBook::new(vec![cand("s0", "r0", 1.0)], queue, towns.collect(), Some(gold))
    }

    #[test]
    fn most_ambiguous_first_with_stable_cursor() {
        let mut b = book();
        let page = b.view(&ReviewFilters::default(), None, 2).unwrap();
        assert_eq!(page.items.iter().map(|i| i.id).collect::<Vec<_>>(), vec![4, 3]);
        let cursor = page.next_cursor.unwrap();
        b.commit(4, Verdict::Reject, "op", Utc::now()).unwrap();
        let rest = b.view(&ReviewFilters::default(), Some(&cursor), 2).unwrap();
        assert_eq!(rest.items.iter().map(|i| i.id).collect::<Vec<_>>(), vec![2, 1]);
        assert!(rest.next_cursor.is_none());
        assert!(b.view(&ReviewFilters::default(), Some("x"), 2).is_err());
    }

    #[test]
    fn accept_lifts_recall_and_reject_keeps_metrics() {
        let mut b = book();
        let before = b.live_metrics().unwrap();
        b.commit(1, Verdict::Reject, "op", Utc::now()).unwrap();
        assert_eq!(b.live_metrics().unwrap(), before);
        b.commit(2, Verdict::Accept { candidate: 0 }, "op", Utc::now()).unwrap();
        let after = b.live_metrics().unwrap();
        assert!(after.recall > before.recall);
        assert_eq!(after, score(&b.links(), b.gold().unwrap()));
        assert_eq!(b.metrics().before_manual.unwrap(), before);
        assert_eq!(
            b.commit(2, Verdict::Reject, "op", Utc::now()),
            Err(ReviewError::Conflict { id: 2, state: ReviewState::Accepted })
        );
        assert_eq!(b.audit().len(), 2);
    }

    #[test]
    fn skip_moves_to_tail_and_stays_decidable() {
        let mut b = book();
        b.commit(4, Verdict::Skip, "op", Utc::now()).unwrap();
        let ids: Vec<u64> = b.view(&ReviewFilters::default(), None, 50).unwrap().items.iter().map(|i| i.id).collect();
        assert_eq!(ids, vec![3, 2, 1, 4]);
        assert!(b.commit(4, Verdict::Accept { candidate: 1 }, "op", Utc::now()).is_ok());
        assert_eq!(b.check(3, Verdict::Accept { candidate: 9 }), Err(ReviewError::NoCandidate { id: 3, index: 9 }));
    }

    #[test]
    fn filters_narrow_the_queue() {
        let b = book();
        let f = ReviewFilters {
            municipality: Some("prato".into()),
            ..ReviewFilters::default()
        };
        assert_eq!(b.view(&f, None, 50).unwrap().items.iter().map(|i| i.id).collect::<Vec<_>>(), vec![4, 2]);
        let f = ReviewFilters {
            score_band: Some("0.65-0.8".into()),
            ..ReviewFilters::default()
        };
        assert_eq!(b.view(&f, None, 50).unwrap().items.iter().map(|i| i.id).collect::<Vec<_>>(), vec![2, 1]);
        let f = ReviewFilters {
            method: Some("exact".into()),
            ..ReviewFilters::default()
        };
        assert!(b.view(&f, None, 50).unwrap().items.is_empty());
        let f = ReviewFilters {
            score_band: Some("0.9-0.1".into()),
            ..ReviewFilters::default()
        };
        assert!(b.view(&f, None, 50).is_err());
    }
}
