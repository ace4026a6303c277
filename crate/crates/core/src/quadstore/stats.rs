use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Iri;
use crate::schema::MacroClass;

/// How a context's quads are accounted: the three columns of the store
/// accounting table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DataKind {
    Static,
    Realtime,
    Reconciliation,
}

impl DataKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DataKind::Static => "static",
            DataKind::Realtime => "realtime",
            DataKind::Reconciliation => "reconciliation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "static" => Some(DataKind::Static),
            "realtime" => Some(DataKind::Realtime),
            "reconciliation" => Some(DataKind::Reconciliation),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextTag {
    pub macroclass: MacroClass,
    pub kind: DataKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KindCounts {
    pub static_count: u64,
    pub realtime_count: u64,
    pub reconciliation_count: u64,
}

impl KindCounts {
    pub fn new(static_count: u64, realtime_count: u64, reconciliation_count: u64) -> Self {
        KindCounts {
            static_count,
            realtime_count,
            reconciliation_count,
        }
    }

    pub fn total(&self) -> u64 {
        self.static_count + self.realtime_count + self.reconciliation_count
    }

    pub fn add(&mut self, kind: DataKind, n: u64) {
        match kind {
            DataKind::Static => self.static_count += n,
            DataKind::Realtime => self.realtime_count += n,
            DataKind::Reconciliation => self.reconciliation_count += n,
        }
    }

    fn accumulate(&mut self, other: &KindCounts) {
        self.static_count += other.static_count;
        self.realtime_count += other.realtime_count;
        self.reconciliation_count += other.reconciliation_count;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum StatsRow {
    Macro(MacroClass),
    /// Quads whose context carries no dataset tag. Counted in the static
    /// column.
    Unclassified,
}

impl fmt::Display for StatsRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsRow::Macro(m) => write!(f, "{}", m.label()),
            StatsRow::Unclassified => f.write_str("Unclassified"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoreStats {
    pub per_macroclass: BTreeMap<StatsRow, KindCounts>,
    pub totals: KindCounts,
    /// Contexts that had no tag when the stats were taken.
    pub unclassified_contexts: Vec<Iri>,
}

impl StoreStats {
    /// Builds the table from row counts. Every macroclass gets a row, zero if
    /// absent from `rows`; totals are column sums.
    pub fn from_rows(rows: impl IntoIterator<Item = (StatsRow, KindCounts)>) -> Self {
        let mut per_macroclass: BTreeMap<StatsRow, KindCounts> = MacroClass::ALL
            .iter()
            .map(|&m| (StatsRow::Macro(m), KindCounts::default()))
            .collect();
        for (row, counts) in rows {
            per_macroclass.entry(row).or_default().accumulate(&counts);
        }
        let mut totals = KindCounts::default();
        for counts in per_macroclass.values() {
            totals.accumulate(counts);
        }
        StoreStats {
            per_macroclass,
            totals,
            unclassified_contexts: Vec::new(),
        }
    }

    pub fn grand_total(&self) -> u64 {
        self.totals.total()
    }

    /// Column totals equal column sums, and the grand total equals both the
    /// sum of row totals and the sum of column totals.
    pub fn is_consistent(&self) -> bool {
        let mut sums = KindCounts::default();
        let mut row_total_sum = 0;
        for counts in self.per_macroclass.values() {
            sums.accumulate(counts);
            row_total_sum += counts.total();
        }
        sums == self.totals && row_total_sum == self.totals.total()
    }

    /// Tab-separated table with a header, one row per macroclass and a total
    /// row.
    pub fn to_table(&self) -> String {
        let mut out = String::from("Macroclass\tStatic\tRealTime\tReconciliation\tTotal\n");
        for (row, c) in &self.per_macroclass {
            out.push_str(&format!(
                "{row}\t{}\t{}\t{}\t{}\n",
                c.static_count,
                c.realtime_count,
                c.reconciliation_count,
                c.total()
            ));
        }
        let t = &self.totals;
        out.push_str(&format!(
            "Total\t{}\t{}\t{}\t{}\n",
            t.static_count,
            t.realtime_count,
            t.reconciliation_count,
            t.total()
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_all_zero() {
        let stats = StoreStats::from_rows([]);
        assert_eq!(stats.per_macroclass.len(), 7);
        assert_eq!(stats.grand_total(), 0);
        assert!(stats.is_consistent());
    }

    #[test]
    fn tampered_totals_are_detected() {
        let mut stats = StoreStats::from_rows([(
            StatsRow::Macro(MacroClass::StreetGuide),
            KindCounts::new(5, 0, 0),
        )]);
        assert!(stats.is_consistent());
        stats.totals.static_count += 1;
        assert!(!stats.is_consistent());
    }
}
