use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Change {
    pub column: String,
    pub before: String,
    pub after: String,
    pub rule_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// One version of one source row. `raw_fields` is never modified after
/// staging; cleaning works on `clean_fields`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StagedRecord {
    pub dataset_id: String,
    pub record_key: String,
    raw_fields: BTreeMap<String, String>,
    pub clean_fields: BTreeMap<String, String>,
    pub version: u32,
    pub ingested_at: DateTime<FixedOffset>,
    pub change_log: Vec<Change>,
}

impl StagedRecord {
    pub fn new(
        dataset_id: &str,
        record_key: &str,
        raw_fields: BTreeMap<String, String>,
        version: u32,
        ingested_at: DateTime<FixedOffset>,
    ) -> Self {
        StagedRecord {
            dataset_id: dataset_id.to_string(),
            record_key: record_key.to_string(),
            clean_fields: raw_fields.clone(),
            raw_fields,
            version: version.max(1),
            ingested_at,
            change_log: Vec::new(),
        }
    }

    pub fn raw_fields(&self) -> &BTreeMap<String, String> {
        &self.raw_fields
    }
}

/// Outcome of staging one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    New,
    NewVersion,
    Unchanged,
}

/// Versioned staging table keyed by (dataset, record key, version).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StagingStore {
    records: BTreeMap<(String, String, u32), StagedRecord>,
}

impl StagingStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn latest(&self, dataset: &str, key: &str) -> Option<&StagedRecord> {
        self.versions(dataset, key).last()
    }

    pub fn versions<'a>(&'a self, dataset: &str, key: &str) -> impl DoubleEndedIterator<Item = &'a StagedRecord> + 'a {
        let lo = (dataset.to_string(), key.to_string(), 0);
        let hi = (dataset.to_string(), key.to_string(), u32::MAX);
        self.records.range(lo..=hi).map(|(_, r)| r)
    }

    /// Every stored version of a dataset's records.
    pub fn dataset<'a>(&'a self, dataset: &'a str) -> impl Iterator<Item = &'a StagedRecord> + 'a {
        self.records
            .range((dataset.to_string(), String::new(), 0)..)
            .take_while(move |((d, _, _), _)| d == dataset)
            .map(|(_, r)| r)
    }

    /// Stages a row. A row whose raw cells equal the latest version is left
    /// alone; otherwise a new version is appended.
    pub fn stage(
        &mut self,
        dataset: &str,
        key: &str,
        raw: BTreeMap<String, String>,
        now: DateTime<FixedOffset>,
    ) -> (StageOutcome, &StagedRecord) {
        let (outcome, version) = match self.latest(dataset, key) {
            Some(prev) if prev.raw_fields == raw => (StageOutcome::Unchanged, prev.version),
            Some(prev) => (StageOutcome::NewVersion, prev.version + 1),
            None => (StageOutcome::New, 1),
        };
        let id = (dataset.to_string(), key.to_string(), version);
        if outcome != StageOutcome::Unchanged {
            self.records.insert(id.clone(), StagedRecord::new(dataset, key, raw, version, now));
        }
        (outcome, &self.records[&id])
    }

    /// Replaces the cleaning output of a staged version. Raw cells are
    /// kept from the stored copy.
    pub fn update_clean(&mut self, record: &StagedRecord) -> Result<(), IngestError> {
        let id = (record.dataset_id.clone(), record.record_key.clone(), record.version);
        let stored = self.records.get_mut(&id).ok_or_else(|| IngestError::UnknownRecord {
            dataset: record.dataset_id.clone(),
            record_key: record.record_key.clone(),
            version: record.version,
        })?;
        stored.clean_fields = record.clean_fields.clone();
        stored.change_log = record.change_log.clone();
        Ok(())
    }

    pub fn remove_dataset(&mut self, dataset: &str) -> usize {
        let before = self.records.len();
        self.records.retain(|(d, _, _), _| d != dataset);
        before - self.records.len()
    }

    /// Writes one JSON record per line.
    pub fn save(&self, path: &Path) -> Result<(), IngestError> {
        let io = |source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
        for r in self.records.values() {
            serde_json::to_writer(&mut out, r).map_err(|e| io(e.into()))?;
            out.write_all(b"\n").map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let io = |source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut store = StagingStore::new();
        let file = match fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(store),
            Err(e) => return Err(io(e)),
        };
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let r: StagedRecord = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
                row: idx + 1,
                column: None,
                reason: e.to_string(),
            })?;
            store.records.insert((r.dataset_id.clone(), r.record_key.clone(), r.version), r);
        }
        Ok(store)
    }
}
