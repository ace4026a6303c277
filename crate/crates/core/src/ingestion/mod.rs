//! Dataset registration, staged ingestion with raw preservation, quality
//! improvement, mapping to quads and real-time feeds.

mod descriptor;
mod formats;
mod mapping;
mod pipeline;
mod quality;
mod realtime;
mod scheduler;
mod staging;

use std::path::PathBuf;

use thiserror::Error;

pub use descriptor::{AutomationLevel, DatasetDescriptor, DatasetStatus, OriginalFormat, ProcessType};
pub use formats::{read_csv, read_feed, read_polylines, read_rows, read_xml, Row};
pub use mapping::{encode_segment, map_to_quads, mint_iri, ClassBinding, LinkBinding, MappingSpec, PropertyBinding};
pub use pipeline::{weather_fixture, DatasetEntry, FeedReport, JobReport, Pipeline, WEATHER_MAPPING};
pub use quality::{quality_improve, FieldRule, RuleSet, FLAG_ONLY};
pub use realtime::{
    complete_weather_istat, ingest_realtime, instant_iri, municipality_iri, AvmReport, FeedKind, FeedPayload,
    IstatFlag, IstatTable, ParkingStatus, Prediction, SensorObservation, UpcomingStop, WeatherReport,
};
pub use scheduler::{DueRun, ScheduleEntry, Scheduler};
pub use staging::{Change, StageOutcome, StagedRecord, StagingStore};

use crate::quadstore::{Datatype, StoreError};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("descriptor{}: {reason}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Descriptor { line: Option<usize>, reason: String },
    #[error("mapping{}: {reason}", line.map(|l| format!(" line {l}")).unwrap_or_default())]
    Mapping { line: Option<usize>, reason: String },
    #[error("table line {line}: {reason}")]
    Rules { line: usize, reason: String },
    #[error("row {row}{}: {reason}", column.as_ref().map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        row: usize,
        column: Option<String>,
        reason: String,
    },
    #[error("record {record_key}: role {role} lacks key column {column}")]
    MissingKey {
        record_key: String,
        role: String,
        column: String,
    },
    #[error("record {record_key}: {value:?} in {column} is not a valid {}", datatype.local_name())]
    BadValue {
        record_key: String,
        column: String,
        value: String,
        datatype: Datatype,
    },
    #[error("no staged version {version} of {dataset}/{record_key}")]
    UnknownRecord {
        dataset: String,
        record_key: String,
        version: u32,
    },
    #[error("dataset {0} is already registered")]
    DuplicateDataset(String),
    #[error("unknown dataset {0}")]
    UnknownDataset(String),
    #[error("dataset {dataset}: status cannot move from {from} to {to}")]
    StatusTransition {
        dataset: String,
        from: DatasetStatus,
        to: DatasetStatus,
    },
    #[error("dataset {0} is not a realtime dataset")]
    NotRealtime(String),
    #[error("feed payload: {0}")]
    Feed(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
}
