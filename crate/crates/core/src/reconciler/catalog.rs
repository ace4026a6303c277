use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::address::{light, municipality_key, normalize, CivicNumber, NormalizedAddress, QualifierTable, RawAddress};
use crate::quadstore::Iri;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CatalogNumber {
    pub iri: Iri,
    /// External access Entry of this street number.
    pub entry: Iri,
    pub civic: CivicNumber,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CatalogRoad {
    pub iri: Iri,
    pub municipality: String,
    pub official_name: String,
    pub alternative_name: Option<String>,
    pub street_numbers: Vec<CatalogNumber>,
}

/// Precomputed comparison forms of one road name.
#[derive(Debug, Clone)]
pub(crate) struct PreparedName {
    pub light: String,
    pub normalized: NormalizedAddress,
    pub street: String,
}

impl PreparedName {
    fn new(name: &str, table: &QualifierTable) -> Self {
        let normalized = normalize(&RawAddress::new(name, "", ""), table);
        PreparedName {
            light: light(name),
            street: normalized.street(),
            normalized,
        }
    }
}

/// Street-guide roads indexed by municipality for reconciliation.
#[derive(Debug, Clone)]
pub struct ToponymCatalog {
    roads: Vec<CatalogRoad>,
    names: Vec<Vec<PreparedName>>,
    by_municipality: HashMap<String, Vec<usize>>,
    aliases: BTreeMap<String, String>,
    table: QualifierTable,
}

impl ToponymCatalog {
    pub fn new(mut roads: Vec<CatalogRoad>, table: QualifierTable) -> Self {
        roads.sort_by(|a, b| a.iri.cmp(&b.iri));
        for road in &mut roads {
            road.street_numbers.sort_by(|a, b| a.iri.cmp(&b.iri));
        }
        let names = roads
            .iter()
            .map(|r| {
                std::iter::once(&r.official_name)
                    .chain(&r.alternative_name)
                    .map(|n| PreparedName::new(n, &table))
                    .collect()
            })
            .collect();
        let mut by_municipality: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, road) in roads.iter().enumerate() {
            by_municipality.entry(municipality_key(&road.municipality)).or_default().push(i);
        }
        ToponymCatalog {
            roads,
            names,
            by_municipality,
            aliases: BTreeMap::new(),
            table,
        }
    }

    /// Municipality name variants (e.g. "Vicchio del Mugello" for
    /// "Vicchio") consulted by the knowledge-based metric.
    pub fn with_aliases(mut self, aliases: impl IntoIterator<Item = (String, String)>) -> Self {
        self.aliases = aliases
            .into_iter()
            .map(|(alias, canonical)| (municipality_key(&alias), municipality_key(&canonical)))
            .collect();
        self
    }

    pub fn roads(&self) -> &[CatalogRoad] {
        &self.roads
    }

    pub fn road(&self, index: usize) -> &CatalogRoad {
        &self.roads[index]
    }

    pub fn table(&self) -> &QualifierTable {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.roads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roads.is_empty()
    }

    pub(crate) fn names(&self, index: usize) -> &[PreparedName] {
        &self.names[index]
    }

    /// Indices of the roads of a municipality; `key` is a municipality key.
    pub(crate) fn block(&self, key: &str) -> &[usize] {
        self.by_municipality.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub(crate) fn resolve_alias<'a>(&'a self, key: &'a str) -> &'a str {
        self.aliases.get(key).map(String::as_str).unwrap_or(key)
    }

    /// First street number of the road designated by any of `civics`,
    /// preferring one whose suffix also agrees.
    pub fn find_number(&self, index: usize, civics: &[CivicNumber]) -> Option<&CatalogNumber> {
        let numbers = &self.roads[index].street_numbers;
        civics.iter().find_map(|c| {
            let matching = || numbers.iter().filter(|n| c.matches_catalog(&n.civic));
            matching().find(|n| n.civic.suffix == c.suffix).or_else(|| matching().next())
        })
    }
}
