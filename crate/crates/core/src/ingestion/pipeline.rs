use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, FixedOffset, SecondsFormat};
use serde::{Deserialize, Serialize};

use super::mapping::encode_segment;
use super::{
    complete_weather_istat, ingest_realtime, map_to_quads, quality_improve, read_rows, DatasetDescriptor,
    DatasetStatus, FeedPayload, IngestError, IstatFlag, IstatTable, MappingSpec, ProcessType, RuleSet, ScheduleEntry,
    Scheduler, StageOutcome, StagedRecord, StagingStore, FLAG_ONLY,
};
use crate::address::QualifierTable;
use crate::quadstore::{DataKind, Iri, Quad, QuadStore};
use crate::schema::{load_schema, MacroClass, Schema};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetEntry {
    pub descriptor: DatasetDescriptor,
    pub mapping: MappingSpec,
    pub rules: RuleSet,
    pub context: Iri,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobReport {
    pub dataset_id: String,
    pub scheduled_for: Option<DateTime<FixedOffset>>,
    pub coalesced: u32,
    pub rows: usize,
    pub new_records: usize,
    pub new_versions: usize,
    pub unchanged: usize,
    pub flagged_fields: usize,
    pub quads_inserted: usize,
    pub quads_removed: usize,
    /// Records left unmapped, with the reason.
    pub skipped: Vec<String>,
    pub status: Option<DatasetStatus>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeedReport {
    pub quads_inserted: usize,
    pub review_flag: Option<IstatFlag>,
}

#[derive(Serialize, Deserialize)]
struct SavedState {
    base: String,
    datasets: BTreeMap<String, DatasetEntry>,
    scheduler: Scheduler,
}

/// Registry, staging table and schedule of the ingestion pipeline. Quads
/// go to a caller-owned [`QuadStore`].
#[derive(Debug, Clone)]
pub struct Pipeline {
    schema: Schema,
    table: QualifierTable,
    base: String,
    datasets: BTreeMap<String, DatasetEntry>,
    staging: StagingStore,
    scheduler: Scheduler,
}

impl Pipeline {
    pub fn new(base: &str) -> Self {
        Pipeline {
            schema: load_schema(),
            table: QualifierTable::seed(),
            base: base.trim_end_matches('/').to_string(),
            datasets: BTreeMap::new(),
            staging: StagingStore::new(),
            scheduler: Scheduler::new(),
        }
    }

    pub fn with_qualifiers(mut self, table: QualifierTable) -> Self {
        self.table = table;
        self
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn staging(&self) -> &StagingStore {
        &self.staging
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.scheduler
    }

    pub fn datasets(&self) -> impl Iterator<Item = &DatasetEntry> {
        self.datasets.values()
    }

    pub fn dataset(&self, id: &str) -> Result<&DatasetEntry, IngestError> {
        self.datasets.get(id).ok_or_else(|| IngestError::UnknownDataset(id.to_string()))
    }

    /// Context holding every dataset descriptor.
    pub fn metadata_context(&self) -> Iri {
        Iri::new(format!("{}/graph/metadata", self.base)).expect("base is a valid IRI")
    }

    pub fn data_context(&self, id: &str) -> Iri {
        Iri::new(format!("{}/graph/{}", self.base, encode_segment(id))).expect("base is a valid IRI")
    }

    pub fn dataset_iri(&self, id: &str) -> Iri {
        Iri::new(format!("{}/dataset/{}", self.base, encode_segment(id))).expect("base is a valid IRI")
    }

    /// Registers a dataset: its descriptor goes to the metadata context and
    /// a fresh data context is tagged for it. The dataset is scheduled from
    /// its creation date, one run per tick.
    pub fn register_dataset(
        &mut self,
        store: &mut QuadStore,
        mut descriptor: DatasetDescriptor,
        mut mapping: MappingSpec,
    ) -> Result<Iri, IngestError> {
        descriptor.validate()?;
        if self.datasets.contains_key(&descriptor.id) {
            return Err(IngestError::DuplicateDataset(descriptor.id));
        }
        mapping.dataset_id = descriptor.id.clone();
        mapping.validate(&self.schema)?;
        descriptor.status = DatasetStatus::Registered;
        let id = descriptor.id.clone();
        let context = self.data_context(&id);
        let kind = match descriptor.process_type {
            ProcessType::Realtime => DataKind::Realtime,
            _ => DataKind::Static,
        };
        let meta = self.metadata_context();
        store.tag_context(&meta, MacroClass::Metadata, DataKind::Static)?;
        store.tag_context(&context, descriptor.macroclass, kind)?;
        store.insert(&descriptor.to_quads(&self.dataset_iri(&id), &meta, Some(&mapping.to_text())))?;
        self.scheduler.upsert(ScheduleEntry {
            dataset_id: id.clone(),
            next_run: descriptor.creation_date,
            period: descriptor.update_period,
            max_concurrent: 1,
        });
        let columns: Vec<String> = mapping
            .property_bindings
            .iter()
            .map(|p| p.column.clone())
            .chain(mapping.class_bindings.iter().flat_map(|c| c.key_columns.clone()))
            .collect();
        let rules = RuleSet::for_columns(columns.iter().map(String::as_str));
        self.datasets.insert(
            id,
            DatasetEntry {
                descriptor,
                mapping,
                rules,
                context: context.clone(),
            },
        );
        Ok(context)
    }

    pub fn set_rules(&mut self, id: &str, rules: RuleSet) -> Result<(), IngestError> {
        self.datasets
            .get_mut(id)
            .ok_or_else(|| IngestError::UnknownDataset(id.to_string()))?
            .rules = rules;
        Ok(())
    }

    pub fn schedule(&mut self, entry: ScheduleEntry) -> Result<(), IngestError> {
        self.dataset(&entry.dataset_id)?;
        self.scheduler.upsert(entry);
        Ok(())
    }

    /// Moves a dataset's status and rewrites its descriptor quads.
    pub fn set_status(
        &mut self,
        store: &mut QuadStore,
        id: &str,
        status: DatasetStatus,
        now: DateTime<FixedOffset>,
    ) -> Result<(), IngestError> {
        let meta = self.metadata_context();
        let subject = self.dataset_iri(id);
        let entry = self
            .datasets
            .get_mut(id)
            .ok_or_else(|| IngestError::UnknownDataset(id.to_string()))?;
        let from = entry.descriptor.status;
        if from != status && !from.can_move_to(status) {
            return Err(IngestError::StatusTransition {
                dataset: id.to_string(),
                from,
                to: status,
            });
        }
        let mapping_text = entry.mapping.to_text();
        let old = entry.descriptor.to_quads(&subject, &meta, Some(&mapping_text));
        entry.descriptor.status = status;
        entry.descriptor.last_update = Some(now);
        if status == DatasetStatus::Indexed {
            entry.descriptor.triple_creation_date = Some(now);
        }
        let new = entry.descriptor.to_quads(&subject, &meta, Some(&mapping_text));
        let stale: Vec<Quad> = old.into_iter().filter(|q| !new.contains(q)).collect();
        store.remove(&stale)?;
        store.insert(&new)?;
        Ok(())
    }

    fn record_key(mapping: &MappingSpec, row: &BTreeMap<String, String>, index: usize) -> String {
        let columns = mapping.record_key_columns();
        let values: Option<Vec<String>> = columns
            .iter()
            .map(|c| row.get(*c).map(|v| v.trim()).filter(|v| !v.is_empty()).map(encode_segment))
            .collect();
        match values {
            Some(v) if !v.is_empty() => v.join("/"),
            _ => format!("row-{index}"),
        }
    }

    /// Parses `text` under the dataset's format and stages every row.
    /// Returns the records that are new or changed. A parse failure marks
    /// the dataset failed.
    pub fn ingest_text(
        &mut self,
        store: &mut QuadStore,
        id: &str,
        text: &str,
        now: DateTime<FixedOffset>,
        report: &mut JobReport,
    ) -> Result<Vec<StagedRecord>, IngestError> {
        let entry = self.dataset(id)?.clone();
        let rows = match read_rows(entry.descriptor.original_format, text) {
            Ok(rows) => rows,
            Err(e) => {
                self.set_status(store, id, DatasetStatus::Failed, now)?;
                return Err(e);
            }
        };
        let mut fresh = Vec::new();
        for row in rows {
            report.rows += 1;
            let key = Self::record_key(&entry.mapping, &row, report.rows);
            let (outcome, record) = self.staging.stage(id, &key, row, now);
            match outcome {
                StageOutcome::New => report.new_records += 1,
                StageOutcome::NewVersion => report.new_versions += 1,
                StageOutcome::Unchanged => {
                    report.unchanged += 1;
                    continue;
                }
            }
            fresh.push(record.clone());
        }
        if self.dataset(id)?.descriptor.status != DatasetStatus::Ingested {
            self.set_status(store, id, DatasetStatus::Ingested, now)?;
        }
        Ok(fresh)
    }

    pub fn ingest_file(
        &mut self,
        store: &mut QuadStore,
        id: &str,
        path: &Path,
        now: DateTime<FixedOffset>,
    ) -> Result<JobReport, IngestError> {
        let text = fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.run_job(store, id, &[text], now)
    }

    /// Ingest, improve, map and index the given source texts.
    pub fn run_job(
        &mut self,
        store: &mut QuadStore,
        id: &str,
        texts: &[String],
        now: DateTime<FixedOffset>,
    ) -> Result<JobReport, IngestError> {
        let mut report = JobReport {
            dataset_id: id.to_string(),
            ..JobReport::default()
        };
        let mut fresh = Vec::new();
        for text in texts {
            fresh.extend(self.ingest_text(store, id, text, now, &mut report)?);
        }
        let entry = self.dataset(id)?.clone();
        let improved: Vec<StagedRecord> = fresh
            .iter()
            .map(|r| quality_improve(r, &entry.rules, &self.table))
            .collect();
        for r in &improved {
            report.flagged_fields += r.change_log.iter().filter(|c| c.rule_id == FLAG_ONLY).count();
            self.staging.update_clean(r)?;
        }
        self.set_status(store, id, DatasetStatus::Improved, now)?;
        let mut to_insert = Vec::new();
        let mut to_remove = Vec::new();
        for r in &improved {
            match map_to_quads(r, &entry.mapping, &self.base, &entry.context) {
                Ok(quads) => {
                    if r.version > 1 {
                        if let Some(prev) = self.staging.versions(id, &r.record_key).rev().nth(1) {
                            if let Ok(old) = map_to_quads(prev, &entry.mapping, &self.base, &entry.context) {
                                to_remove.extend(old.into_iter().filter(|q| !quads.contains(q)));
                            }
                        }
                    }
                    to_insert.extend(quads);
                }
                Err(e) => report.skipped.push(e.to_string()),
            }
        }
        self.set_status(store, id, DatasetStatus::Mapped, now)?;
        report.quads_removed = store.remove(&to_remove)?;
        report.quads_inserted = store.insert(&to_insert)?;
        self.set_status(store, id, DatasetStatus::Indexed, now)?;
        report.status = Some(DatasetStatus::Indexed);
        Ok(report)
    }

    /// Runs every due dataset. `fetch` supplies the source texts of one run;
    /// a failing dataset is reported and marked failed without stopping the
    /// others.
    pub fn run_scheduler<F>(&mut self, store: &mut QuadStore, now: DateTime<FixedOffset>, mut fetch: F) -> Vec<JobReport>
    where
        F: FnMut(&DatasetDescriptor, DateTime<FixedOffset>) -> Result<Vec<String>, String>,
    {
        let due = self.scheduler.take_due(now);
        let mut reports = Vec::new();
        for run in due {
            let Some(entry) = self.datasets.get(&run.dataset_id) else { continue };
            let descriptor = entry.descriptor.clone();
            let outcome = fetch(&descriptor, run.scheduled_for)
                .map_err(|e| IngestError::Feed(format!("fetch failed: {e}")))
                .and_then(|texts| self.run_job(store, &run.dataset_id, &texts, run.scheduled_for));
            let mut report = match outcome {
                Ok(r) => r,
                Err(e) => {
                    let _ = self.set_status(store, &run.dataset_id, DatasetStatus::Failed, run.scheduled_for);
                    JobReport {
                        dataset_id: run.dataset_id.clone(),
                        status: Some(DatasetStatus::Failed),
                        error: Some(e.to_string()),
                        ..JobReport::default()
                    }
                }
            };
            report.scheduled_for = Some(run.scheduled_for);
            report.coalesced = run.coalesced;
            reports.push(report);
        }
        reports
    }

    /// Writes one feed payload into a realtime dataset's context. Weather
    /// reports get their ISTAT code when `istat` knows the municipality.
    pub fn post_feed(
        &mut self,
        store: &mut QuadStore,
        id: &str,
        payload: FeedPayload,
        istat: Option<&IstatTable>,
    ) -> Result<FeedReport, IngestError> {
        let entry = self.dataset(id)?;
        if entry.descriptor.process_type != ProcessType::Realtime {
            return Err(IngestError::NotRealtime(id.to_string()));
        }
        let context = entry.context.clone();
        let (payload, review_flag) = match (payload, istat) {
            (FeedPayload::Weather(w), Some(table)) if w.istat_code.is_none() => {
                let (w, flag) = complete_weather_istat(w, table);
                (FeedPayload::Weather(w), flag)
            }
            (p, _) => (p, None),
        };
        let quads = ingest_realtime(&payload, &self.base, id, &context)?;
        Ok(FeedReport {
            quads_inserted: store.insert(&quads)?,
            review_flag,
        })
    }

    /// Drops a dataset's data context, staged records, schedule and
    /// descriptor.
    pub fn remove_dataset(&mut self, store: &mut QuadStore, id: &str) -> Result<usize, IngestError> {
        let entry = self
            .datasets
            .remove(id)
            .ok_or_else(|| IngestError::UnknownDataset(id.to_string()))?;
        let removed = store.remove_context(&entry.context)?;
        let descriptor = store.matches(Some(&self.dataset_iri(id)), None, None, Some(&self.metadata_context()));
        store.remove(&descriptor)?;
        self.staging.remove_dataset(id);
        self.scheduler.remove(id);
        Ok(removed)
    }

    /// Persists the registry and schedule (`pipeline.json`) and the staging
    /// table (`staging.jsonl`) under `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), IngestError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| IngestError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let state = SavedState {
            base: self.base.clone(),
            datasets: self.datasets.clone(),
            scheduler: self.scheduler.clone(),
        };
        let path = dir.join("pipeline.json");
        let json = serde_json::to_string_pretty(&state).expect("state serialises");
        fs::write(&path, json).map_err(io(&path))?;
        self.staging.save(&dir.join("staging.jsonl"))
    }

    /// Loads a saved pipeline, or an empty one with `base` if `dir` holds
    /// none.
    pub fn load(dir: &Path, base: &str) -> Result<Self, IngestError> {
        let path = dir.join("pipeline.json");
        let mut pipeline = Pipeline::new(base);
        match fs::read_to_string(&path) {
            Ok(text) => {
                let state: SavedState = serde_json::from_str(&text).map_err(|e| IngestError::Parse {
                    row: e.line(),
                    column: None,
                    reason: e.to_string(),
                })?;
                pipeline.base = state.base;
                pipeline.datasets = state.datasets;
                pipeline.scheduler = state.scheduler;
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(pipeline),
            Err(source) => return Err(IngestError::Io { path, source }),
        }
        pipeline.staging = StagingStore::load(&dir.join("staging.jsonl"))?;
        Ok(pipeline)
    }
}

/// Mapping of the weather forecast files produced by [`weather_fixture`].
pub const WEATHER_MAPPING: &str = "\
CLASS
report\tWeatherReport\tmunicipality,updateTime
instant\tInstant\tmunicipality,updateTime
prediction\tWeatherPrediction\tmunicipality,updateTime,line
PROP
instant\tinXSDDateTime\tupdateTime\tdateTime
prediction\tday\tday\tstring
prediction\tdescription\tdescription\tstring
prediction\tminTemp\tminTemp\tdecimal
prediction\tmaxTemp\tmaxTemp\tdecimal
LINK
report\tupdateTime\tinstant
instant\tinstantWReport\treport
report\thasPrediction\tprediction
";

const SKIES: [&str; 6] = ["sereno", "poco nuvoloso", "nuvoloso", "pioggia debole", "pioggia", "temporale"];

/// One forecast file per municipality issued at `issued`: 16 prediction
/// lines (four days, four slots) with `;`-separated columns.
pub fn weather_fixture(municipalities: &[&str], issued: DateTime<FixedOffset>) -> Vec<String> {
    let stamp = issued.to_rfc3339_opts(SecondsFormat::Secs, true);
    municipalities
        .iter()
        .enumerate()
        .map(|(m, name)| {
            let mut text = String::from("municipality;updateTime;line;day;description;minTemp;maxTemp\n");
            for line in 0..16u32 {
                let day = (issued + chrono::Duration::days(i64::from(line / 4))).format("%Y-%m-%d");
                let seed = issued.timestamp() as u64 / 3600 + m as u64 * 31 + u64::from(line) * 7;
                let min = 2.0 + (seed % 90) as f64 / 10.0;
                let max = min + 4.0 + (seed % 37) as f64 / 10.0;
                text.push_str(&format!(
                    "{name};{stamp};{};{day};{};{min:.1};{max:.1}\n",
                    line + 1,
                    SKIES[(seed % SKIES.len() as u64) as usize]
                ));
            }
            text
        })
        .collect()
}
