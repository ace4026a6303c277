use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::quadstore::{Iri, Literal, Quad, Term};
use crate::schema::MacroClass;
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OriginalFormat {
    #[serde(rename = "CSV")]
    Csv,
    #[serde(rename = "XML")]
    Xml,
    /// Pre-extracted polyline text: one coordinate pair per line.
    #[serde(rename = "KMZ")]
    Kmz,
    /// JSON array of flat records, as served by web-service feeds.
    #[serde(rename = "FEED")]
    Feed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessType {
    Static,
    SemiStatic,
    Realtime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AutomationLevel {
    Automatic,
    SemiAutomatic,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DatasetStatus {
    Registered,
    Ingested,
    Improved,
    Mapped,
    Indexed,
    Failed,
}

macro_rules! text_enum {
    ($t:ty { $($v:ident => $s:literal),+ $(,)? }) => {
        impl $t {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$v => $s),+ }
            }

            pub fn parse(s: &str) -> Option<Self> {
                match s { $($s => Some(Self::$v),)+ _ => None }
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

text_enum!(OriginalFormat { Csv => "CSV", Xml => "XML", Kmz => "KMZ", Feed => "FEED" });
text_enum!(ProcessType { Static => "static", SemiStatic => "semi-static", Realtime => "realtime" });
text_enum!(AutomationLevel { Automatic => "automatic", SemiAutomatic => "semi-automatic", Manual => "manual" });
text_enum!(DatasetStatus {
    Registered => "registered",
    Ingested => "ingested",
    Improved => "improved",
    Mapped => "mapped",
    Indexed => "indexed",
    Failed => "failed",
});

impl DatasetStatus {
    /// Forward moves along the pipeline, a jump to `failed` from anywhere,
    /// and a new cycle (`ingested`) once a run has finished or failed.
    pub fn can_move_to(self, next: DatasetStatus) -> bool {
        use DatasetStatus::*;
        match (self, next) {
            (_, Failed) => true,
            (Indexed | Failed, Ingested) => true,
            (Failed, _) => false,
            (a, b) => b > a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DatasetDescriptor {
    pub id: String,
    pub creation_date: DateTime<FixedOffset>,
    pub source: String,
    pub original_format: OriginalFormat,
    pub description: String,
    pub license: String,
    pub process_type: ProcessType,
    pub automation_level: AutomationLevel,
    pub access_type: String,
    #[serde(with = "humantime_serde_compat")]
    pub update_period: Duration,
    pub last_update: Option<DateTime<FixedOffset>>,
    pub triple_creation_date: Option<DateTime<FixedOffset>>,
    pub status: DatasetStatus,
    pub macroclass: MacroClass,
}

mod humantime_serde_compat {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&humantime::format_duration(*d).to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let text = String::deserialize(d)?;
        humantime::parse_duration(&text).map_err(serde::de::Error::custom)
    }
}

const DAY: Duration = Duration::from_secs(86_400);

pub(crate) fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id != "metadata"
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
}

impl DatasetDescriptor {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |reason: String| IngestError::Descriptor { line: None, reason };
        if !valid_id(&self.id) {
            return Err(bad(format!("invalid dataset id {:?}", self.id)));
        }
        if self.update_period.is_zero() {
            return Err(bad("updatePeriod must be positive".into()));
        }
        if self.process_type == ProcessType::Realtime && self.update_period > DAY {
            return Err(bad(format!(
                "realtime dataset {} updates every {}, more than a day",
                self.id,
                humantime::format_duration(self.update_period)
            )));
        }
        Ok(())
    }

    /// Parses the flat `key=value` descriptor format. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut fields: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(IngestError::Descriptor {
                    line: Some(line_no),
                    reason: format!("expected key=value, found {trimmed:?}"),
                });
            };
            let key = key.trim();
            if !FIELDS.contains(&key) {
                return Err(IngestError::Descriptor {
                    line: Some(line_no),
                    reason: format!("unknown key {key:?}"),
                });
            }
            if fields.insert(key, (line_no, value.trim())).is_some() {
                return Err(IngestError::Descriptor {
                    line: Some(line_no),
                    reason: format!("duplicate key {key:?}"),
                });
            }
        }
        let get = |key: &str| fields.get(key).map(|&(_, v)| v);
        let need = |key: &str| {
            get(key).ok_or_else(|| IngestError::Descriptor {
                line: None,
                reason: format!("missing key {key:?}"),
            })
        };
        let invalid = |key: &str, value: &str| IngestError::Descriptor {
            line: fields.get(key).map(|&(l, _)| l),
            reason: format!("invalid {key} {value:?}"),
        };
        let date = |key: &str, value: &str| DateTime::parse_from_rfc3339(value).map_err(|_| invalid(key, value));
        let optional_date = |key: &str| get(key).filter(|v| !v.is_empty()).map(|v| date(key, v)).transpose();
        let enum_field = |key: &str, parse: &dyn Fn(&str) -> bool| {
            let v = need(key)?;
            if parse(v) {
                Ok(v)
            } else {
                Err(invalid(key, v))
            }
        };
        let descriptor = DatasetDescriptor {
            id: need("id")?.to_string(),
            creation_date: date("creationDate", need("creationDate")?)?,
            source: need("source")?.to_string(),
            original_format: OriginalFormat::parse(enum_field("originalFormat", &|v| OriginalFormat::parse(v).is_some())?)
                .unwrap(),
            description: get("description").unwrap_or_default().to_string(),
            license: need("license")?.to_string(),
            process_type: ProcessType::parse(enum_field("processType", &|v| ProcessType::parse(v).is_some())?).unwrap(),
            automation_level: AutomationLevel::parse(enum_field("automationLevel", &|v| {
                AutomationLevel::parse(v).is_some()
            })?)
            .unwrap(),
            access_type: get("accessType").unwrap_or_default().to_string(),
            update_period: {
                let v = need("updatePeriod")?;
                humantime::parse_duration(v).map_err(|_| invalid("updatePeriod", v))?
            },
            last_update: optional_date("lastUpdate")?,
            triple_creation_date: optional_date("tripleCreationDate")?,
            status: match get("status") {
                None | Some("") => DatasetStatus::Registered,
                Some(v) => DatasetStatus::parse(v).ok_or_else(|| invalid("status", v))?,
            },
            macroclass: {
                let v = need("macroclass")?;
                MacroClass::parse(v).ok_or_else(|| invalid("macroclass", v))?
            },
        };
        descriptor.validate()?;
        Ok(descriptor)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.fields() {
            out.push_str(&format!("{key}={value}\n"));
        }
        out
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let mut f = vec![
            ("id", self.id.clone()),
            ("creationDate", self.creation_date.to_rfc3339()),
            ("source", self.source.clone()),
            ("originalFormat", self.original_format.to_string()),
            ("description", self.description.clone()),
            ("license", self.license.clone()),
            ("processType", self.process_type.to_string()),
            ("automationLevel", self.automation_level.to_string()),
            ("accessType", self.access_type.clone()),
            ("updatePeriod", humantime::format_duration(self.update_period).to_string()),
        ];
        if let Some(t) = self.last_update {
            f.push(("lastUpdate", t.to_rfc3339()));
        }
        if let Some(t) = self.triple_creation_date {
            f.push(("tripleCreationDate", t.to_rfc3339()));
        }
        f.push(("status", self.status.to_string()));
        f.push(("macroclass", self.macroclass.to_string()));
        f
    }

    /// The descriptor as Dataset quads in `ctx`. The update period is
    /// stored in whole seconds; the mapping spec text rides along.
    pub fn to_quads(&self, subject: &Iri, ctx: &Iri, mapping_text: Option<&str>) -> Vec<Quad> {
        let prop = |local: &str| Iri::new(vocab::km4c(local)).unwrap();
        let mut quads = vec![Quad::new(
            subject.clone(),
            Iri::new(vocab::RDF_TYPE).unwrap(),
            Iri::new(vocab::km4c("Dataset")).unwrap(),
            ctx.clone(),
        )];
        let mut push = |local: &str, lit: Literal| quads.push(Quad::new(subject.clone(), prop(local), lit, ctx.clone()));
        push("datasetId", Literal::string(&self.id));
        push("creationDate", Literal::date_time(self.creation_date));
        push("source", Literal::string(&self.source));
        push("originalFormat", Literal::string(self.original_format.as_str()));
        if !self.description.is_empty() {
            push("description", Literal::string(&self.description));
        }
        push("license", Literal::string(&self.license));
        push("processType", Literal::string(self.process_type.as_str()));
        push("automationLevel", Literal::string(self.automation_level.as_str()));
        if !self.access_type.is_empty() {
            push("accessType", Literal::string(&self.access_type));
        }
        push("updatePeriod", Literal::integer(self.update_period.as_secs() as i64));
        if let Some(t) = self.last_update {
            push("lastUpdate", Literal::date_time(t));
        }
        if let Some(t) = self.triple_creation_date {
            push("tripleCreationDate", Literal::date_time(t));
        }
        push("status", Literal::string(self.status.as_str()));
        push("macroclass", Literal::string(self.macroclass.as_str()));
        if let Some(text) = mapping_text {
            push("mappingSpec", Literal::string(text));
        }
        quads
    }

    /// Rebuilds a descriptor from the quads about `subject`.
    pub fn from_quads(subject: &Iri, quads: &[Quad]) -> Result<Self, IngestError> {
        let mut text = String::new();
        for q in quads.iter().filter(|q| &q.subject == subject) {
            let local = vocab::local_name(q.predicate.as_str());
            let Term::Literal(lit) = &q.object else { continue };
            let value = match local {
                "updatePeriod" => {
                    let secs = lit.as_i64().ok_or_else(|| IngestError::Descriptor {
                        line: None,
                        reason: "updatePeriod is not an integer".into(),
                    })?;
                    humantime::format_duration(Duration::from_secs(secs.max(0) as u64)).to_string()
                }
                "datasetId" => {
                    text.push_str(&format!("id={}\n", lit.lexical()));
                    continue;
                }
                "mappingSpec" => continue,
                _ => lit.lexical().to_string(),
            };
            if FIELDS.contains(&local) {
                text.push_str(&format!("{local}={value}\n"));
            }
        }
        Self::parse(&text)
    }
}

const FIELDS: [&str; 14] = [
    "id",
    "creationDate",
    "source",
    "originalFormat",
    "description",
    "license",
    "processType",
    "automationLevel",
    "accessType",
    "updatePeriod",
    "lastUpdate",
    "tripleCreationDate",
    "status",
    "macroclass",
];
