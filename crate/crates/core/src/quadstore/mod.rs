//! In-memory quad store with named-graph contexts.
//!
//! Terms are dictionary-encoded and every quad is kept in four orderings
//! (SPOC, POSC, OSPC, CSPO) so any pattern with bound terms is answered by a
//! range scan over the ordering with the longest bound prefix. owl:sameAs
//! statements feed a union-find used by closure queries, and entities with
//! WGS84 coordinates are kept in a grid index for nearest-neighbour search.
//!
//! Persistence is an append-only operation log replayed on open.

mod compact;
mod geo;
pub mod nquads;
mod sameas;
mod stats;
mod term;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::ops::Bound;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use compact::{AggregationSpec, CompactionReport};
pub use geo::{haversine_m, EARTH_RADIUS_M};
pub use stats::{ContextTag, DataKind, KindCounts, StatsRow, StoreStats};
pub use term::{Datatype, GeoPoint, Iri, Literal, Quad, Term};

use crate::schema::MacroClass;
use crate::vocab;
use geo::GeoGrid;
use sameas::SameAsIndex;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid IRI {0:?}")]
    InvalidIri(String),
    #[error("literal {lexical:?} is not a valid {datatype:?}")]
    InvalidLiteral { lexical: String, datatype: Datatype },
    #[error("malformed quad {quad}: {reason}")]
    MalformedQuad { quad: String, reason: String },
    #[error("coordinates out of range: lat {lat}, long {long}")]
    InvalidCoordinates { lat: f64, long: f64 },
    #[error("an entity cannot be sameAs itself: {0}")]
    SelfSameAs(Iri),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("store log {path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("archive {path}: {source}")]
    Archive {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

const SPOC: [usize; 4] = [0, 1, 2, 3];
const POSC: [usize; 4] = [1, 2, 0, 3];
const OSPC: [usize; 4] = [2, 0, 1, 3];
const CSPO: [usize; 4] = [3, 0, 1, 2];
const ORDERINGS: [[usize; 4]; 4] = [SPOC, POSC, OSPC, CSPO];

type Key = [u32; 4];

#[derive(Debug, Default, Clone)]
struct Dictionary {
    terms: Vec<Term>,
    ids: HashMap<Term, u32>,
}

impl Dictionary {
    fn intern(&mut self, term: &Term) -> u32 {
        if let Some(&id) = self.ids.get(term) {
            return id;
        }
        let id = self.terms.len() as u32;
        self.terms.push(term.clone());
        self.ids.insert(term.clone(), id);
        id
    }

    fn get(&self, term: &Term) -> Option<u32> {
        self.ids.get(term).copied()
    }

    fn iri_id(&self, iri: &Iri) -> Option<u32> {
        // Terms are keyed by value; wrapping clones only the Arc.
        self.get(&Term::Iri(iri.clone()))
    }

    fn term(&self, id: u32) -> &Term {
        &self.terms[id as usize]
    }

    fn iri(&self, id: u32) -> &Iri {
        self.term(id).as_iri().expect("subject/predicate/context ids are IRIs")
    }
}

/// A quad pattern; `None` positions are wildcards.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pattern {
    pub subject: Option<Iri>,
    pub predicate: Option<Iri>,
    pub object: Option<Term>,
    pub context: Option<Iri>,
}

impl Pattern {
    pub fn any() -> Self {
        Pattern::default()
    }

    pub fn s(mut self, iri: &Iri) -> Self {
        self.subject = Some(iri.clone());
        self
    }

    pub fn p(mut self, iri: &Iri) -> Self {
        self.predicate = Some(iri.clone());
        self
    }

    pub fn o(mut self, term: impl Into<Term>) -> Self {
        self.object = Some(term.into());
        self
    }

    pub fn c(mut self, iri: &Iri) -> Self {
        self.context = Some(iri.clone());
        self
    }
}

#[derive(Debug)]
struct Log {
    path: PathBuf,
    writer: BufWriter<File>,
}

#[derive(Debug, Default)]
pub struct QuadStore {
    dict: Dictionary,
    indexes: [BTreeSet<Key>; 4],
    same_as: SameAsIndex,
    geo: GeoGrid,
    tags: BTreeMap<Iri, ContextTag>,
    log: Option<Log>,
    lat_id: Option<u32>,
    long_id: Option<u32>,
    same_as_id: Option<u32>,
}

impl QuadStore {
    pub fn new() -> Self {
        QuadStore::default()
    }

    /// Opens (or creates) a store backed by the append-only log at `path`,
    /// replaying every recorded operation.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let log_err = |source| StoreError::Log {
            path: path.clone(),
            source,
        };
        let mut store = QuadStore::new();
        if path.exists() {
            let text = std::fs::read_to_string(&path).map_err(log_err)?;
            store.replay(&text)?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(log_err)?;
        store.log = Some(Log {
            path,
            writer: BufWriter::new(file),
        });
        Ok(store)
    }

    fn replay(&mut self, text: &str) -> Result<(), StoreError> {
        for (idx, line) in text.lines().enumerate() {
            let parse_err = |reason: String| StoreError::Parse {
                line: idx + 1,
                reason,
            };
            if line.is_empty() {
                continue;
            }
            let (op, rest) = line.split_at(line.find(' ').unwrap_or(line.len()));
            let rest = rest.trim_start();
            match op {
                "A" => {
                    let quad = nquads::parse_line(rest).map_err(parse_err)?;
                    self.insert_one(&quad);
                }
                "D" => {
                    let quad = nquads::parse_line(rest).map_err(parse_err)?;
                    self.remove_one(&quad);
                }
                "T" => {
                    let parts: Vec<&str> = rest.split(' ').collect();
                    let [ctx, macroclass, kind] = parts[..] else {
                        return Err(parse_err(format!("bad tag line {rest:?}")));
                    };
                    let ctx = Iri::new(ctx.trim_matches(['<', '>']))
                        .map_err(|e| parse_err(e.to_string()))?;
                    let macroclass = MacroClass::parse(macroclass)
                        .ok_or_else(|| parse_err(format!("unknown macroclass {macroclass}")))?;
                    let kind = DataKind::parse(kind)
                        .ok_or_else(|| parse_err(format!("unknown kind {kind}")))?;
                    self.tags.insert(ctx, ContextTag { macroclass, kind });
                }
                other => return Err(parse_err(format!("unknown log op {other:?}"))),
            }
        }
        Ok(())
    }

    fn append_log(&mut self, lines: impl IntoIterator<Item = String>) -> Result<(), StoreError> {
        if let Some(log) = self.log.as_mut() {
            let err = |source| StoreError::Log {
                path: log.path.clone(),
                source,
            };
            for line in lines {
                log.writer.write_all(line.as_bytes()).map_err(err)?;
                log.writer.write_all(b"\n").map_err(err)?;
            }
            log.writer.flush().map_err(err)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.indexes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inserts quads, ignoring exact duplicates. Returns the number of quads
    /// that were not already stored.
    pub fn insert(&mut self, quads: &[Quad]) -> Result<usize, StoreError> {
        let mut added = Vec::new();
        for quad in quads {
            if self.insert_one(quad) {
                added.push(format!("A {}", nquads::quad_to_line(quad)));
            }
        }
        let n = added.len();
        self.append_log(added)?;
        Ok(n)
    }

    /// Removes the given quads if present; returns how many were removed.
    pub fn remove(&mut self, quads: &[Quad]) -> Result<usize, StoreError> {
        let mut removed = Vec::new();
        for quad in quads {
            if self.remove_one(quad) {
                removed.push(format!("D {}", nquads::quad_to_line(quad)));
            }
        }
        let n = removed.len();
        self.append_log(removed)?;
        Ok(n)
    }

    /// Drops every quad of a context (per-dataset rollback).
    pub fn remove_context(&mut self, context: &Iri) -> Result<usize, StoreError> {
        let quads = self.match_pattern(&Pattern::any().c(context));
        self.remove(&quads)
    }

    fn key_of(&mut self, quad: &Quad) -> Key {
        [
            self.dict.intern(&Term::Iri(quad.subject.clone())),
            self.dict.intern(&Term::Iri(quad.predicate.clone())),
            self.dict.intern(&quad.object),
            self.dict.intern(&Term::Iri(quad.context.clone())),
        ]
    }

    fn lookup_key(&self, quad: &Quad) -> Option<Key> {
        Some([
            self.dict.iri_id(&quad.subject)?,
            self.dict.iri_id(&quad.predicate)?,
            self.dict.get(&quad.object)?,
            self.dict.iri_id(&quad.context)?,
        ])
    }

    fn refresh_special_ids(&mut self) {
        let lookup = |d: &Dictionary, s: &str| d.get(&Term::Iri(Iri::new(s).unwrap()));
        if self.lat_id.is_none() {
            self.lat_id = lookup(&self.dict, vocab::GEO_LAT);
        }
        if self.long_id.is_none() {
            self.long_id = lookup(&self.dict, vocab::GEO_LONG);
        }
        if self.same_as_id.is_none() {
            self.same_as_id = lookup(&self.dict, vocab::OWL_SAME_AS);
        }
    }

    fn insert_one(&mut self, quad: &Quad) -> bool {
        let key = self.key_of(quad);
        if !self.indexes[0].insert(key) {
            return false;
        }
        for (index, order) in self.indexes.iter_mut().zip(ORDERINGS).skip(1) {
            index.insert(permute(key, order));
        }
        self.refresh_special_ids();
        let [s, p, o, _] = key;
        if Some(p) == self.same_as_id && self.dict.term(o).as_iri().is_some() && s != o {
            self.same_as.union(s, o);
        }
        if Some(p) == self.lat_id || Some(p) == self.long_id {
            self.refresh_geo(s);
        }
        true
    }

    fn remove_one(&mut self, quad: &Quad) -> bool {
        let Some(key) = self.lookup_key(quad) else {
            return false;
        };
        if !self.indexes[0].remove(&key) {
            return false;
        }
        for (index, order) in self.indexes.iter_mut().zip(ORDERINGS).skip(1) {
            index.remove(&permute(key, order));
        }
        let [s, p, _, _] = key;
        if Some(p) == self.same_as_id {
            self.rebuild_same_as();
        }
        if Some(p) == self.lat_id || Some(p) == self.long_id {
            self.refresh_geo(s);
        }
        true
    }

    fn rebuild_same_as(&mut self) {
        self.same_as.clear();
        let Some(p) = self.same_as_id else { return };
        let keys: Vec<Key> = self.scan([None, Some(p), None, None]).collect();
        for [s, _, o, _] in keys {
            if s != o && self.dict.term(o).as_iri().is_some() {
                self.same_as.union(s, o);
            }
        }
    }

    fn first_decimal(&self, subject: u32, predicate: Option<u32>) -> Option<f64> {
        let p = predicate?;
        self.scan([Some(subject), Some(p), None, None])
            .find_map(|[_, _, o, _]| self.dict.term(o).as_literal().and_then(Literal::as_f64))
    }

    fn refresh_geo(&mut self, subject: u32) {
        let lat = self.first_decimal(subject, self.lat_id);
        let long = self.first_decimal(subject, self.long_id);
        let point = match (lat, long) {
            (Some(lat), Some(long)) => GeoPoint::new(lat, long).ok(),
            _ => None,
        };
        self.geo.set(subject, point);
    }

    /// Keys (in SPOC order) matching the bound ids.
    fn scan(&self, bound: [Option<u32>; 4]) -> impl Iterator<Item = Key> + '_ {
        let (which, prefix_len) = ORDERINGS
            .iter()
            .enumerate()
            .map(|(i, order)| (i, order.iter().take_while(|&&pos| bound[pos].is_some()).count()))
            .max_by_key(|&(i, len)| (len, std::cmp::Reverse(i)))
            .unwrap();
        let order = ORDERINGS[which];
        let mut lo = [0u32; 4];
        let mut hi = [u32::MAX; 4];
        for (slot, &pos) in order.iter().enumerate().take(prefix_len) {
            lo[slot] = bound[pos].unwrap();
            hi[slot] = bound[pos].unwrap();
        }
        self.indexes[which]
            .range((Bound::Included(lo), Bound::Included(hi)))
            .map(move |&k| unpermute(k, order))
            .filter(move |k| (0..4).all(|pos| bound[pos].is_none_or(|b| b == k[pos])))
    }

    fn quad_of(&self, [s, p, o, c]: Key) -> Quad {
        Quad {
            subject: self.dict.iri(s).clone(),
            predicate: self.dict.iri(p).clone(),
            object: self.dict.term(o).clone(),
            context: self.dict.iri(c).clone(),
        }
    }

    fn bind(&self, pattern: &Pattern) -> Option<[Option<u32>; 4]> {
        let id = |t: Option<Term>| -> Option<Option<u32>> {
            match t {
                None => Some(None),
                Some(t) => self.dict.get(&t).map(Some),
            }
        };
        Some([
            id(pattern.subject.clone().map(Term::Iri))?,
            id(pattern.predicate.clone().map(Term::Iri))?,
            id(pattern.object.clone())?,
            id(pattern.context.clone().map(Term::Iri))?,
        ])
    }

    /// Stored quads matching every bound term, sorted by (s, p, o, c).
    pub fn match_pattern(&self, pattern: &Pattern) -> Vec<Quad> {
        let Some(bound) = self.bind(pattern) else {
            return Vec::new();
        };
        let mut quads: Vec<Quad> = self.scan(bound).map(|k| self.quad_of(k)).collect();
        quads.sort();
        quads
    }

    /// Convenience wrapper over [`QuadStore::match_pattern`].
    pub fn matches(
        &self,
        s: Option<&Iri>,
        p: Option<&Iri>,
        o: Option<&Term>,
        c: Option<&Iri>,
    ) -> Vec<Quad> {
        self.match_pattern(&Pattern {
            subject: s.cloned(),
            predicate: p.cloned(),
            object: o.cloned(),
            context: c.cloned(),
        })
    }

    pub fn contains(&self, quad: &Quad) -> bool {
        self.lookup_key(quad).is_some_and(|k| self.indexes[0].contains(&k))
    }

    /// Records `a owl:sameAs b` in context `c`.
    pub fn add_same_as(&mut self, a: &Iri, b: &Iri, c: &Iri) -> Result<Quad, StoreError> {
        if a == b {
            return Err(StoreError::SelfSameAs(a.clone()));
        }
        let quad = Quad::new(
            a.clone(),
            Iri::new(vocab::OWL_SAME_AS).unwrap(),
            b.clone(),
            c.clone(),
        );
        self.insert(std::slice::from_ref(&quad))?;
        Ok(quad)
    }

    /// The sameAs equivalence class of `iri`, sorted. Always contains `iri`.
    pub fn resolve(&self, iri: &Iri) -> Vec<Iri> {
        let Some(id) = self.dict.iri_id(iri) else {
            return vec![iri.clone()];
        };
        let mut members: Vec<Iri> = self
            .same_as
            .class_of(id)
            .into_iter()
            .map(|m| self.dict.iri(m).clone())
            .collect();
        members.sort();
        members
    }

    /// Like [`QuadStore::match_pattern`] but a bound subject or IRI object
    /// also matches every member of its sameAs class. Quads are returned as
    /// stored.
    pub fn match_with_closure(&self, pattern: &Pattern) -> Vec<Quad> {
        let subjects: Vec<Option<Iri>> = match &pattern.subject {
            Some(s) => self.resolve(s).into_iter().map(Some).collect(),
            None => vec![None],
        };
        let objects: Vec<Option<Term>> = match &pattern.object {
            Some(Term::Iri(o)) => self.resolve(o).into_iter().map(|i| Some(Term::Iri(i))).collect(),
            other => vec![other.clone()],
        };
        let mut out = BTreeSet::new();
        for s in &subjects {
            for o in &objects {
                let p = Pattern {
                    subject: s.clone(),
                    predicate: pattern.predicate.clone(),
                    object: o.clone(),
                    context: pattern.context.clone(),
                };
                out.extend(self.match_pattern(&p));
            }
        }
        out.into_iter().collect()
    }

    /// Up to `k` entities within `max_distance` metres of `point`, nearest
    /// first, ties broken by IRI. With `class_filter`, only entities typed
    /// with one of the given classes are considered.
    pub fn geo_near(
        &self,
        point: GeoPoint,
        k: usize,
        max_distance: f64,
        class_filter: Option<&[Iri]>,
    ) -> Vec<(Iri, f64)> {
        let type_id = self.dict.iri_id(&Iri::new(vocab::RDF_TYPE).unwrap());
        let class_ids: Option<Vec<u32>> = class_filter.map(|classes| {
            classes.iter().filter_map(|c| self.dict.iri_id(c)).collect()
        });
        let keep = |id: u32| -> bool {
            match (&class_ids, type_id) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some(ids), Some(t)) => ids
                    .iter()
                    .any(|&c| self.scan([Some(id), Some(t), Some(c), None]).next().is_some()),
            }
        };
        let mut ranked: Vec<(Iri, f64)> = self
            .geo
            .candidates(point, k, max_distance, &keep)
            .into_iter()
            .map(|(id, d)| (self.dict.iri(id).clone(), d))
            .collect();
        ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        ranked.dedup_by(|a, b| a.0 == b.0);
        ranked.truncate(k);
        ranked
    }

    /// Coordinates currently indexed for `entity`.
    pub fn location(&self, entity: &Iri) -> Option<GeoPoint> {
        self.dict.iri_id(entity).and_then(|id| self.geo.point(id))
    }

    pub fn tag_context(
        &mut self,
        context: &Iri,
        macroclass: MacroClass,
        kind: DataKind,
    ) -> Result<(), StoreError> {
        let tag = ContextTag { macroclass, kind };
        if self.tags.get(context) == Some(&tag) {
            return Ok(());
        }
        self.tags.insert(context.clone(), tag);
        self.append_log([format!(
            "T <{context}> {} {}",
            macroclass.as_str(),
            kind.as_str()
        )])
    }

    pub fn context_tag(&self, context: &Iri) -> Option<ContextTag> {
        self.tags.get(context).copied()
    }

    /// All contexts that currently hold at least one quad, sorted.
    pub fn contexts(&self) -> Vec<Iri> {
        let mut out = Vec::new();
        let mut last = None;
        for k in &self.indexes[3] {
            if last != Some(k[0]) {
                last = Some(k[0]);
                out.push(self.dict.iri(k[0]).clone());
            }
        }
        out.sort();
        out
    }

    /// Quad counts per macroclass and data kind, derived from context tags.
    pub fn store_stats(&self) -> StoreStats {
        let mut per_context: BTreeMap<u32, u64> = BTreeMap::new();
        for k in &self.indexes[3] {
            *per_context.entry(k[0]).or_default() += 1;
        }
        let mut unclassified = Vec::new();
        let rows: Vec<(StatsRow, KindCounts)> = per_context
            .into_iter()
            .map(|(ctx, n)| {
                let iri = self.dict.iri(ctx);
                let mut counts = KindCounts::default();
                match self.tags.get(iri) {
                    Some(tag) => {
                        counts.add(tag.kind, n);
                        (StatsRow::Macro(tag.macroclass), counts)
                    }
                    None => {
                        unclassified.push(iri.clone());
                        counts.add(DataKind::Static, n);
                        (StatsRow::Unclassified, counts)
                    }
                }
            })
            .collect();
        let mut stats = StoreStats::from_rows(rows);
        unclassified.sort();
        stats.unclassified_contexts = unclassified;
        stats
    }

    /// N-Quads export, sorted, optionally restricted to one context.
    pub fn export(&self, context: Option<&Iri>) -> String {
        let pattern = Pattern {
            context: context.cloned(),
            ..Pattern::any()
        };
        nquads::serialize(&self.match_pattern(&pattern))
    }

    /// Parses an N-Quads document and inserts it.
    pub fn load_nquads(&mut self, text: &str) -> Result<usize, StoreError> {
        let quads = nquads::parse_document(text)?;
        self.insert(&quads)
    }
}

fn permute(key: Key, order: [usize; 4]) -> Key {
    [key[order[0]], key[order[1]], key[order[2]], key[order[3]]]
}

fn unpermute(key: Key, order: [usize; 4]) -> Key {
    let mut out = [0; 4];
    for (slot, &pos) in order.iter().enumerate() {
        out[pos] = key[slot];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://x/{s}")).unwrap()
    }

    fn q(s: &str, p: &str, o: &str, c: &str) -> Quad {
        Quad::new(iri(s), iri(p), iri(o), iri(c))
    }

    #[test]
    fn insert_counts_new_quads_only() {
        let mut store = QuadStore::new();
        let quads = [q("a", "p", "x", "c"), q("b", "p", "y", "c"), q("a", "p2", "x", "c")];
        assert_eq!(store.insert(&quads).unwrap(), 3);
        assert_eq!(store.insert(&quads[..1]).unwrap(), 0);
        assert_eq!(store.len(), 3);
    }

    #[test]
    fn malformed_iri_is_rejected_with_quad_context() {
        let err = Quad::from_parts("http://x/s", "", Literal::string("v"), "http://x/c").unwrap_err();
        assert!(matches!(err, StoreError::MalformedQuad { .. }));
        assert!(err.to_string().contains("http://x/s"));
    }

    #[test]
    fn pattern_queries() {
        let mut store = QuadStore::new();
        store
            .insert(&[q("a", "p1", "x", "c1"), q("b", "p1", "y", "c1"), q("b", "p2", "x", "c2")])
            .unwrap();
        assert_eq!(store.match_pattern(&Pattern::any().s(&iri("a"))), vec![q("a", "p1", "x", "c1")]);
        assert_eq!(store.match_pattern(&Pattern::any()).len(), 3);
        assert_eq!(store.match_pattern(&Pattern::any().o(iri("x"))).len(), 2);
        assert_eq!(store.match_pattern(&Pattern::any().c(&iri("c2"))), vec![q("b", "p2", "x", "c2")]);
        assert_eq!(
            store.match_pattern(&Pattern::any().s(&iri("b")).c(&iri("c1"))),
            vec![q("b", "p1", "y", "c1")]
        );
        assert!(store.match_pattern(&Pattern::any().s(&iri("zzz"))).is_empty());
        // sorted lexicographically
        let all = store.match_pattern(&Pattern::any());
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
    }

    #[test]
    fn same_as_closure() {
        let mut store = QuadStore::new();
        let c = iri("links");
        store.add_same_as(&iri("A"), &iri("B"), &c).unwrap();
        store.add_same_as(&iri("B"), &iri("C"), &c).unwrap();
        assert_eq!(store.resolve(&iri("A")), vec![iri("A"), iri("B"), iri("C")]);
        assert_eq!(store.resolve(&iri("C")), store.resolve(&iri("A")));
        assert!(matches!(store.add_same_as(&iri("A"), &iri("A"), &c), Err(StoreError::SelfSameAs(_))));
        assert_eq!(store.resolve(&iri("lonely")), vec![iri("lonely")]);
    }

    #[test]
    fn closure_matching_returns_stored_quads() {
        let mut store = QuadStore::new();
        store.insert(&[q("B", "p1", "x", "c1")]).unwrap();
        let plain = store.match_with_closure(&Pattern::any().s(&iri("A")));
        assert!(plain.is_empty());
        assert_eq!(store.match_with_closure(&Pattern::any().s(&iri("B"))), store.match_pattern(&Pattern::any().s(&iri("B"))));
        store.add_same_as(&iri("A"), &iri("B"), &iri("links")).unwrap();
        assert_eq!(
            store.match_with_closure(&Pattern::any().s(&iri("A")).c(&iri("c1"))),
            vec![q("B", "p1", "x", "c1")]
        );
        // predicates are not closed over sameAs
        store.add_same_as(&iri("p1"), &iri("pX"), &iri("links")).unwrap();
        assert!(store.match_with_closure(&Pattern::any().p(&iri("pX")).c(&iri("c1"))).is_empty());
        // object closure
        store.add_same_as(&iri("x"), &iri("x2"), &iri("links")).unwrap();
        assert_eq!(
            store.match_with_closure(&Pattern::any().o(iri("x2")).c(&iri("c1"))),
            vec![q("B", "p1", "x", "c1")]
        );
    }

    #[test]
    fn removing_same_as_splits_classes() {
        let mut store = QuadStore::new();
        let link = store.add_same_as(&iri("A"), &iri("B"), &iri("links")).unwrap();
        store.add_same_as(&iri("C"), &iri("D"), &iri("other")).unwrap();
        store.remove(&[link]).unwrap();
        assert_eq!(store.resolve(&iri("A")), vec![iri("A")]);
        assert_eq!(store.resolve(&iri("C")), vec![iri("C"), iri("D")]);
    }

    #[test]
    fn geo_entities_follow_their_coordinates() {
        let mut store = QuadStore::new();
        let lat = Iri::new(vocab::GEO_LAT).unwrap();
        let long = Iri::new(vocab::GEO_LONG).unwrap();
        let c = iri("c");
        store
            .insert(&[
                Quad::new(iri("e1"), lat.clone(), Literal::decimal(43.77), c.clone()),
                Quad::new(iri("e1"), long.clone(), Literal::decimal(11.25), c.clone()),
                Quad::new(iri("e2"), lat.clone(), Literal::decimal(43.78), c.clone()),
            ])
            .unwrap();
        let p = GeoPoint::new(43.77, 11.25).unwrap();
        let near = store.geo_near(p, 5, f64::INFINITY, None);
        assert_eq!(near, vec![(iri("e1"), 0.0)]);
        store
            .insert(&[Quad::new(iri("e2"), long, Literal::decimal(11.25), c.clone())])
            .unwrap();
        assert_eq!(store.geo_near(p, 5, f64::INFINITY, None).len(), 2);
        store.remove(&[Quad::new(iri("e1"), lat, Literal::decimal(43.77), c)]).unwrap();
        assert_eq!(store.geo_near(p, 5, f64::INFINITY, None)[0].0, iri("e2"));
    }

    #[test]
    fn stats_follow_context_tags() {
        let mut store = QuadStore::new();
        assert_eq!(store.store_stats().grand_total(), 0);
        let ctx = iri("streets");
        store.tag_context(&ctx, MacroClass::StreetGuide, DataKind::Static).unwrap();
        let quads: Vec<Quad> = (0..5).map(|i| q(&format!("r{i}"), "p", "o", "streets")).collect();
        store.insert(&quads).unwrap();
        store.insert(&[q("u", "p", "o", "untagged")]).unwrap();
        let stats = store.store_stats();
        assert_eq!(stats.per_macroclass[&StatsRow::Macro(MacroClass::StreetGuide)].static_count, 5);
        assert_eq!(stats.per_macroclass[&StatsRow::Unclassified].total(), 1);
        assert_eq!(stats.unclassified_contexts, vec![iri("untagged")]);
        assert!(stats.is_consistent());
    }

    #[test]
    fn context_removal_is_scoped() {
        let mut store = QuadStore::new();
        store.insert(&[q("a", "p", "o", "c1"), q("b", "p", "o", "c1"), q("a", "p", "o", "c2")]).unwrap();
        assert_eq!(store.remove_context(&iri("c1")).unwrap(), 2);
        assert_eq!(store.match_pattern(&Pattern::any()), vec![q("a", "p", "o", "c2")]);
        assert_eq!(store.contexts(), vec![iri("c2")]);
    }

    #[test]
    fn log_replay_restores_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.log");
        {
            let mut store = QuadStore::open(&path).unwrap();
            store.tag_context(&iri("c1"), MacroClass::Sensors, DataKind::Realtime).unwrap();
            store.insert(&[q("a", "p", "o", "c1"), q("b", "p", "o", "c1")]).unwrap();
            store.add_same_as(&iri("a"), &iri("b"), &iri("c1")).unwrap();
            store.remove(&[q("b", "p", "o", "c1")]).unwrap();
        }
        let store = QuadStore::open(&path).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.resolve(&iri("b")), vec![iri("a"), iri("b")]);
        assert_eq!(store.context_tag(&iri("c1")).unwrap().kind, DataKind::Realtime);
    }
}
