//! Rolling-window compaction of real-time contexts.
//!
//! A real-time resource is paired with its temporal Instant through one of
//! the `instant*` properties; the Instant carries the timestamp. Resources
//! whose timestamp falls before `now - window` are dropped together with
//! their Instant, archived verbatim, and summarised per calendar day, ISO
//! week and calendar month.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Datelike, Duration, FixedOffset};
use serde::{Deserialize, Serialize};

use super::{nquads, DataKind, Iri, Literal, Pattern, Quad, QuadStore, StoreError, Term};
use crate::vocab;

/// Instant-to-resource link properties.
pub const INSTANT_LINKS: [&str; 5] = [
    "instantParking",
    "instantWReport",
    "instantObserv",
    "instantForecast",
    "instantAVM",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AggregationSpec {
    /// Class of the records whose measure is summarised, e.g. AVMRecord.
    pub record_class: Iri,
    /// Numeric property summarised, e.g. delay.
    pub measure: Iri,
    /// Zone used to assign timestamps to days, weeks and months.
    pub offset: FixedOffset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompactionReport {
    pub window_start: DateTime<FixedOffset>,
    pub window_end: DateTime<FixedOffset>,
    pub dropped_quad_count: usize,
    pub aggregate_quad_count: usize,
    /// Set only when something was archived.
    pub archive_path: Option<PathBuf>,
}

/// Summary of one period bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: u64,
    pub sum: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    /// Summarises `values`; the sum is taken in ascending value order so the
    /// result does not depend on input order.
    pub fn of(values: &[f64]) -> Option<Summary> {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Summary {
            count: sorted.len() as u64,
            sum: sorted.iter().sum(),
            min: *sorted.first()?,
            max: *sorted.last()?,
        })
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    fn merge(&self, other: &Summary) -> Summary {
        Summary {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }
}

/// Day, ISO week and month keys of `t` in zone `offset`.
pub fn period_keys(t: &DateTime<FixedOffset>, offset: &FixedOffset) -> [(&'static str, String); 3] {
    let local = t.with_timezone(offset);
    let week = local.iso_week();
    [
        ("day", local.format("%Y-%m-%d").to_string()),
        ("week", format!("{}-W{:02}", week.year(), week.week())),
        ("month", local.format("%Y-%m").to_string()),
    ]
}

/// IRI of the aggregate entity for a context, spec and period bucket.
pub fn aggregate_iri(ctx: &Iri, spec: &AggregationSpec, period: &str, key: &str) -> Iri {
    Iri::new(format!(
        "{ctx}/aggregate/{}/{}/{period}/{key}",
        vocab::local_name(spec.record_class.as_str()),
        vocab::local_name(spec.measure.as_str()),
    ))
    .expect("aggregate IRIs are built from valid parts")
}

fn km4c(local: &str) -> Iri {
    Iri::new(vocab::km4c(local)).unwrap()
}

struct Expired {
    quads: BTreeSet<Quad>,
    /// (context, timestamp, measure values) of expired records of the
    /// aggregated class.
    samples: Vec<(Iri, DateTime<FixedOffset>, f64)>,
}

impl QuadStore {
    /// Archives and removes real-time resources older than `now - window`,
    /// replacing them with day/week/month aggregates of `spec.measure`.
    ///
    /// The archive is written before the store is touched; if it cannot be
    /// written the store is unchanged.
    pub fn compact(
        &mut self,
        window: Duration,
        now: DateTime<FixedOffset>,
        spec: &AggregationSpec,
        archive: &Path,
    ) -> Result<CompactionReport, StoreError> {
        let cutoff = now - window;
        let expired = self.expired(cutoff, spec);
        let mut report = CompactionReport {
            window_start: cutoff,
            window_end: now,
            dropped_quad_count: 0,
            aggregate_quad_count: 0,
            archive_path: None,
        };
        if expired.quads.is_empty() {
            return Ok(report);
        }
        let dropped: Vec<Quad> = expired.quads.into_iter().collect();
        std::fs::write(archive, nquads::serialize(&dropped)).map_err(|source| StoreError::Archive {
            path: archive.to_path_buf(),
            source,
        })?;
        report.archive_path = Some(archive.to_path_buf());
        report.dropped_quad_count = self.remove(&dropped)?;

        let mut buckets: BTreeMap<(Iri, &'static str, String), Vec<f64>> = BTreeMap::new();
        for (ctx, t, v) in expired.samples {
            for (period, key) in period_keys(&t, &spec.offset) {
                buckets.entry((ctx.clone(), period, key)).or_default().push(v);
            }
        }
        for ((ctx, period, key), values) in buckets {
            let fresh = Summary::of(&values).expect("buckets are non-empty");
            report.aggregate_quad_count += self.write_aggregate(&ctx, spec, period, &key, fresh)?;
        }
        Ok(report)
    }

    fn expired(&self, cutoff: DateTime<FixedOffset>, spec: &AggregationSpec) -> Expired {
        let time_p = km4c("inXSDDateTime");
        let type_p = Iri::new(vocab::RDF_TYPE).unwrap();
        let mut out = Expired {
            quads: BTreeSet::new(),
            samples: Vec::new(),
        };
        let mut seen: BTreeSet<(Iri, Iri)> = BTreeSet::new();
        for (ctx, tag) in &self.tags {
            if tag.kind != DataKind::Realtime {
                continue;
            }
            for link in INSTANT_LINKS {
                for pairing in self.match_pattern(&Pattern::any().p(&km4c(link)).c(ctx)) {
                    let Term::Iri(resource) = &pairing.object else { continue };
                    let instant = &pairing.subject;
                    let Some(t) = self
                        .match_pattern(&Pattern::any().s(instant).p(&time_p).c(ctx))
                        .iter()
                        .find_map(|q| q.object.as_literal().and_then(Literal::as_date_time))
                    else {
                        continue;
                    };
                    if t >= cutoff || !seen.insert((ctx.clone(), resource.clone())) {
                        continue;
                    }
                    let own = self.match_pattern(&Pattern::any().s(resource).c(ctx));
                    if own.iter().any(|q| q.predicate == type_p && q.object.as_iri() == Some(&spec.record_class)) {
                        if let Some(v) = own
                            .iter()
                            .filter(|q| q.predicate == spec.measure)
                            .find_map(|q| q.object.as_literal().and_then(Literal::as_f64))
                        {
                            out.samples.push((ctx.clone(), t, v));
                        }
                    }
                    out.quads.extend(own);
                    out.quads.extend(self.match_pattern(&Pattern::any().s(instant).c(ctx)));
                    // Incoming links from live entities would dangle.
                    out.quads.extend(self.match_pattern(&Pattern::any().o(resource.clone()).c(ctx)));
                }
            }
        }
        out
    }

    fn stored_summary(&self, entity: &Iri, ctx: &Iri) -> Option<Summary> {
        let value = |local: &str| {
            self.match_pattern(&Pattern::any().s(entity).p(&km4c(local)).c(ctx))
                .first()
                .and_then(|q| q.object.as_literal().and_then(Literal::as_f64))
        };
        Some(Summary {
            count: value("sampleCount")? as u64,
            sum: value("sum")?,
            min: value("min")?,
            max: value("max")?,
        })
    }

    fn write_aggregate(
        &mut self,
        ctx: &Iri,
        spec: &AggregationSpec,
        period: &str,
        key: &str,
        fresh: Summary,
    ) -> Result<usize, StoreError> {
        let entity = aggregate_iri(ctx, spec, period, key);
        let summary = match self.stored_summary(&entity, ctx) {
            Some(old) => {
                let stale: Vec<Quad> = ["sampleCount", "sum", "mean", "min", "max"]
                    .iter()
                    .flat_map(|p| self.match_pattern(&Pattern::any().s(&entity).p(&km4c(p)).c(ctx)))
                    .collect();
                self.remove(&stale)?;
                old.merge(&fresh)
            }
            None => fresh,
        };
        let q = |p: &str, o: Term| Quad::new(entity.clone(), km4c(p), o, ctx.clone());
        let quads = [
            Quad::new(entity.clone(), Iri::new(vocab::RDF_TYPE).unwrap(), km4c("StatisticalData"), ctx.clone()),
            q("aggregatePeriod", Literal::string(period).into()),
            q("periodKey", Literal::string(key).into()),
            q("aggregatedClass", spec.record_class.clone().into()),
            q("aggregatedProperty", spec.measure.clone().into()),
            q("sampleCount", Literal::integer(summary.count as i64).into()),
            q("sum", Literal::decimal(summary.sum).into()),
            q("mean", Literal::decimal(summary.mean()).into()),
            q("min", Literal::decimal(summary.min).into()),
            q("max", Literal::decimal(summary.max).into()),
        ];
        self.insert(&quads)
    }
}
