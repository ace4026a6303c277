//! Typed real-time feed payloads and their quads.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, FixedOffset, SecondsFormat};
use serde::{Deserialize, Serialize};

use super::mapping::encode_segment;
use super::IngestError;
use crate::address::municipality_key;
use crate::quadstore::{Iri, Literal, Quad, Term};
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FeedKind {
    Parking,
    Avm,
    Weather,
    Observation,
}

impl FeedKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "parking" => FeedKind::Parking,
            "avm" => FeedKind::Avm,
            "weather" => FeedKind::Weather,
            "observation" => FeedKind::Observation,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParkingStatus {
    pub car_park: String,
    pub free: i64,
    pub occupied: i64,
    pub observed_at: Option<DateTime<FixedOffset>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UpcomingStop {
    pub stop: String,
    pub expected_at: DateTime<FixedOffset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AvmReport {
    pub vehicle: String,
    #[serde(default)]
    pub line: Option<String>,
    #[serde(default)]
    pub last_stop: Option<String>,
    #[serde(default)]
    pub lat: Option<f64>,
    #[serde(default)]
    pub long: Option<f64>,
    /// Seconds.
    #[serde(default)]
    pub delay: Option<f64>,
    pub reported_at: Option<DateTime<FixedOffset>>,
    #[serde(default)]
    pub upcoming: Vec<UpcomingStop>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Prediction {
    pub day: String,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub min_temp: Option<f64>,
    #[serde(default)]
    pub max_temp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeatherReport {
    pub municipality: String,
    #[serde(default)]
    pub istat_code: Option<String>,
    pub updated_at: Option<DateTime<FixedOffset>>,
    #[serde(default)]
    pub predictions: Vec<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SensorObservation {
    pub sensor_site: String,
    /// An Observation subclass such as `TrafficFlow`.
    #[serde(default)]
    pub kind: Option<String>,
    pub value: f64,
    pub measured_at: Option<DateTime<FixedOffset>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "type")]
pub enum FeedPayload {
    Parking(ParkingStatus),
    Avm(AvmReport),
    Weather(WeatherReport),
    Observation(SensorObservation),
}

impl FeedPayload {
    /// Parses an untagged JSON payload of the given kind.
    pub fn parse(kind: FeedKind, json: &str) -> Result<Self, IngestError> {
        let err = |e: serde_json::Error| IngestError::Feed(e.to_string());
        Ok(match kind {
            FeedKind::Parking => FeedPayload::Parking(serde_json::from_str(json).map_err(err)?),
            FeedKind::Avm => FeedPayload::Avm(serde_json::from_str(json).map_err(err)?),
            FeedKind::Weather => FeedPayload::Weather(serde_json::from_str(json).map_err(err)?),
            FeedKind::Observation => FeedPayload::Observation(serde_json::from_str(json).map_err(err)?),
        })
    }

    pub fn timestamp(&self) -> Option<DateTime<FixedOffset>> {
        match self {
            FeedPayload::Parking(p) => p.observed_at,
            FeedPayload::Avm(p) => p.reported_at,
            FeedPayload::Weather(p) => p.updated_at,
            FeedPayload::Observation(p) => p.measured_at,
        }
    }
}

fn stamp(t: DateTime<FixedOffset>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn iri(s: String) -> Iri {
    Iri::new(s).expect("minted from encoded segments")
}

/// Instant of `resource` at `t`. Distinct resources never share an instant.
pub fn instant_iri(resource: &Iri, t: DateTime<FixedOffset>) -> Iri {
    iri(format!("{resource}/instant/{}", encode_segment(&stamp(t))))
}

struct Emitter<'a> {
    ctx: &'a Iri,
    quads: Vec<Quad>,
}

impl Emitter<'_> {
    fn push(&mut self, s: &Iri, local: &str, o: impl Into<Term>) {
        self.quads.push(Quad::new(
            s.clone(),
            Iri::new(vocab::property_iri(local)).unwrap(),
            o,
            self.ctx.clone(),
        ));
    }

    fn typed(&mut self, s: &Iri, class: &str) {
        self.quads.push(Quad::new(
            s.clone(),
            Iri::new(vocab::RDF_TYPE).unwrap(),
            Iri::new(vocab::km4c(class)).unwrap(),
            self.ctx.clone(),
        ));
    }

    /// The Instant of `resource` at `t`, linked both ways.
    fn instant(&mut self, resource: &Iri, forward: &str, backward: &str, t: DateTime<FixedOffset>) {
        let instant = instant_iri(resource, t);
        self.typed(&instant, "Instant");
        self.push(&instant, "inXSDDateTime", Literal::date_time(t));
        self.push(&instant, backward, resource.clone());
        self.push(resource, forward, instant);
    }
}

/// Quads of one feed payload in the dataset context `ctx`; resource IRIs
/// live under `{base}/{dataset}`.
pub fn ingest_realtime(payload: &FeedPayload, base: &str, dataset: &str, ctx: &Iri) -> Result<Vec<Quad>, IngestError> {
    let t = payload
        .timestamp()
        .ok_or_else(|| IngestError::Feed("payload has no timestamp".into()))?;
    let root = format!("{base}/{}", encode_segment(dataset));
    let ts = encode_segment(&stamp(t));
    let mut e = Emitter { ctx, quads: Vec::new() };
    match payload {
        FeedPayload::Parking(p) => {
            let sensor = iri(format!("{root}/carParkSensor/{}", encode_segment(&p.car_park)));
            let record = iri(format!("{sensor}/record/{ts}"));
            e.typed(&sensor, "CarParkSensor");
            e.push(&sensor, "hasRecord", record.clone());
            e.typed(&record, "SituationRecord");
            e.push(&record, "relatedToSensor", sensor.clone());
            e.push(&record, "freeParkingLots", Literal::integer(p.free));
            e.push(&record, "occupiedParkingLots", Literal::integer(p.occupied));
            e.instant(&record, "observationTime", "instantParking", t);
        }
        FeedPayload::Avm(p) => {
            let record = iri(format!("{root}/avmRecord/{}/{ts}", encode_segment(&p.vehicle)));
            e.typed(&record, "AVMRecord");
            e.push(&record, "vehicle", Literal::string(&p.vehicle));
            if let Some(line) = &p.line {
                e.push(&record, "concernLine", iri(format!("{root}/line/{}", encode_segment(line))));
            }
            if let Some(stop) = &p.last_stop {
                e.push(&record, "lastStop", iri(format!("{root}/busStop/{}", encode_segment(stop))));
            }
            if let (Some(lat), Some(long)) = (p.lat, p.long) {
                e.push(&record, "lat", Literal::decimal(lat));
                e.push(&record, "long", Literal::decimal(long));
            }
            if let Some(delay) = p.delay {
                e.push(&record, "delay", Literal::decimal(delay));
            }
            e.instant(&record, "hasLastStopTime", "instantAVM", t);
            for (i, stop) in p.upcoming.iter().enumerate() {
                let forecast = iri(format!("{record}/forecast/{}", i + 1));
                e.typed(&forecast, "BusStopForecast");
                e.push(&record, "includeForecast", forecast.clone());
                e.push(&forecast, "atBusStop", iri(format!("{root}/busStop/{}", encode_segment(&stop.stop))));
                e.instant(&forecast, "hasExpectedTime", "instantForecast", stop.expected_at);
            }
        }
        FeedPayload::Weather(p) => {
            let report = iri(format!("{root}/weatherReport/{}/{ts}", encode_segment(&municipality_key(&p.municipality))));
            e.typed(&report, "WeatherReport");
            if let Some(code) = &p.istat_code {
                e.push(&report, "refersToMunicipality", municipality_iri(base, code));
            }
            e.instant(&report, "updateTime", "instantWReport", t);
            for (i, pr) in p.predictions.iter().enumerate() {
                let prediction = iri(format!("{report}/prediction/{}", i + 1));
                e.typed(&prediction, "WeatherPrediction");
                e.push(&report, "hasPrediction", prediction.clone());
                e.push(&prediction, "day", Literal::string(&pr.day));
                if let Some(d) = &pr.description {
                    e.push(&prediction, "description", Literal::string(d));
                }
                if let Some(v) = pr.min_temp {
                    e.push(&prediction, "minTemp", Literal::decimal(v));
                }
                if let Some(v) = pr.max_temp {
                    e.push(&prediction, "maxTemp", Literal::decimal(v));
                }
            }
        }
        FeedPayload::Observation(p) => {
            let class = p.kind.as_deref().unwrap_or("Observation");
            if !matches!(
                class,
                "Observation" | "TrafficConcentration" | "TrafficHeadway" | "TrafficSpeed" | "TrafficFlow"
            ) {
                return Err(IngestError::Feed(format!("unknown observation kind {class:?}")));
            }
            let site = iri(format!("{root}/sensorSite/{}", encode_segment(&p.sensor_site)));
            let obs = iri(format!("{site}/observation/{ts}"));
            e.typed(&site, "SensorSite");
            e.typed(&obs, class);
            e.push(&obs, "measuredBySensor", site);
            e.push(&obs, "value", Literal::decimal(p.value));
            e.instant(&obs, "measuredTime", "instantObserv", t);
        }
    }
    let mut quads = e.quads;
    quads.sort();
    quads.dedup();
    Ok(quads)
}

pub fn municipality_iri(base: &str, istat_code: &str) -> Iri {
    iri(format!("{base}/municipality/{}", encode_segment(istat_code)))
}

/// Municipality name (or alias) to ISTAT code.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IstatTable {
    codes: BTreeMap<String, String>,
    aliases: BTreeMap<String, String>,
}

const TUSCAN_MUNICIPALITIES: &str = include_str!("istat_tuscany.tsv");

impl IstatTable {
    /// `code<TAB>official name[<TAB>alias...]` per line.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut table = IstatTable::default();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
            let [code, name, aliases @ ..] = &cols[..] else {
                return Err(IngestError::Rules {
                    line: idx + 1,
                    reason: "expected code and name".into(),
                });
            };
            if code.is_empty() || !code.bytes().all(|b| b.is_ascii_digit()) {
                return Err(IngestError::Rules {
                    line: idx + 1,
                    reason: format!("bad ISTAT code {code:?}"),
                });
            }
            let key = municipality_key(name);
            table.codes.insert(key.clone(), code.to_string());
            for alias in aliases {
                table.aliases.insert(municipality_key(alias), key.clone());
            }
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// The bundled table of the Florence-area municipalities.
    pub fn tuscany() -> Self {
        Self::parse(TUSCAN_MUNICIPALITIES).expect("bundled table parses")
    }

    pub fn lookup(&self, name: &str) -> Option<&str> {
        let key = municipality_key(name);
        let key = self.aliases.get(&key).unwrap_or(&key);
        self.codes.get(key).map(String::as_str)
    }
}

/// A weather report whose municipality is not in the table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IstatFlag {
    pub municipality: String,
}

/// Fills in the ISTAT code from the municipality name. Unknown names are
/// kept and flagged for review.
pub fn complete_weather_istat(mut report: WeatherReport, table: &IstatTable) -> (WeatherReport, Option<IstatFlag>) {
    match table.lookup(&report.municipality) {
        Some(code) => {
            report.istat_code = Some(code.to_string());
            (report, None)
        }
        None => {
            let flag = IstatFlag {
                municipality: report.municipality.clone(),
            };
            (report, Some(flag))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> DateTime<FixedOffset> {
        DateTime::parse_from_rfc3339(s).unwrap()
    }

    fn ctx() -> Iri {
        Iri::new("http://x/graph/rt").unwrap()
    }

    fn count(quads: &[Quad], local: &str) -> usize {
        quads.iter().filter(|q| vocab::local_name(q.predicate.as_str()) == local).count()
    }

    #[test]
    fn parking_links_instant_both_ways() {
        let p = FeedPayload::Parking(ParkingStatus {
            car_park: "Beccaria".into(),
            free: 120,
            occupied: 380,
            observed_at: Some(t("2015-03-01T10:00:00+01:00")),
        });
        let quads = ingest_realtime(&p, "http://x", "rt", &ctx()).unwrap();
        assert_eq!(count(&quads, "observationTime"), 1);
        assert_eq!(count(&quads, "instantParking"), 1);
        assert_eq!(count(&quads, "inXSDDateTime"), 1);
    }

    #[test]
    fn equal_timestamps_give_distinct_instants() {
        let at = Some(t("2015-03-01T10:00:00+01:00"));
        let instants = |name: &str| {
            let p = FeedPayload::Parking(ParkingStatus {
                car_park: name.into(),
                free: 1,
                occupied: 1,
                observed_at: at,
            });
            ingest_realtime(&p, "http://x", "rt", &ctx())
                .unwrap()
                .into_iter()
                .filter(|q| vocab::local_name(q.predicate.as_str()) == "inXSDDateTime")
                .map(|q| q.subject)
                .collect::<Vec<_>>()
        };
        assert_ne!(instants("A"), instants("B"));
    }

    #[test]
    fn avm_forecasts_per_stop() {
        let at = t("2015-03-01T10:00:00+01:00");
        let p = FeedPayload::Avm(AvmReport {
            vehicle: "bus 12".into(),
            line: Some("4".into()),
            last_stop: Some("FI123".into()),
            lat: Some(43.77),
            long: Some(11.25),
            delay: Some(30.0),
            reported_at: Some(at),
            upcoming: ["A", "B", "C"]
                .iter()
                .enumerate()
                .map(|(i, s)| UpcomingStop {
                    stop: s.to_string(),
                    expected_at: at + chrono::Duration::minutes(i as i64 + 1),
                })
                .collect(),
        });
        let quads = ingest_realtime(&p, "http://x", "rt", &ctx()).unwrap();
        assert_eq!(count(&quads, "atBusStop"), 3);
        assert_eq!(count(&quads, "instantForecast"), 3);
        assert_eq!(count(&quads, "instantAVM"), 1);
    }

    #[test]
    fn missing_timestamp_is_rejected() {
        let p = FeedPayload::parse(FeedKind::Observation, r#"{"sensorSite":"s1","value":3.5}"#).unwrap();
        assert!(ingest_realtime(&p, "http://x", "rt", &ctx()).is_err());
    }

    #[test]
    fn istat_completion_through_aliases() {
        let table = IstatTable::tuscany();
        let report = |m: &str| WeatherReport {
            municipality: m.into(),
            istat_code: None,
            updated_at: None,
            predictions: vec![],
        };
        let (r, flag) = complete_weather_istat(report("Vicchio del Mugello"), &table);
        assert_eq!((r.istat_code.as_deref(), flag), (table.lookup("Vicchio"), None));
        assert_eq!(complete_weather_istat(report("Firenze"), &table).0.istat_code.as_deref(), Some("048017"));
        let (r, flag) = complete_weather_istat(report("Atlantide"), &table);
        assert!(r.istat_code.is_none());
        assert_eq!(flag.unwrap().municipality, "Atlantide");
    }
}
