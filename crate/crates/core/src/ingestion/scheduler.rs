use std::collections::BTreeMap;
use std::time::Duration;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScheduleEntry {
    pub dataset_id: String,
    pub next_run: DateTime<FixedOffset>,
    #[serde(with = "secs")]
    pub period: Duration,
    /// Runs of this dataset executed per tick; further due slots are
    /// coalesced into the last one.
    pub max_concurrent: u32,
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_secs())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_secs)
    }
}

/// One due slot handed to the executor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DueRun {
    pub dataset_id: String,
    pub scheduled_for: DateTime<FixedOffset>,
    /// Earlier due slots folded into this one.
    pub coalesced: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scheduler {
    entries: BTreeMap<String, ScheduleEntry>,
}

impl Scheduler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn upsert(&mut self, entry: ScheduleEntry) {
        self.entries.insert(entry.dataset_id.clone(), entry);
    }

    pub fn remove(&mut self, dataset: &str) -> Option<ScheduleEntry> {
        self.entries.remove(dataset)
    }

    pub fn entry(&self, dataset: &str) -> Option<&ScheduleEntry> {
        self.entries.get(dataset)
    }

    pub fn entries(&self) -> impl Iterator<Item = &ScheduleEntry> {
        self.entries.values()
    }

    /// Every slot with `nextRun <= now`, advancing each entry by its period
    /// past `now`. Ordered by slot time, then dataset.
    pub fn take_due(&mut self, now: DateTime<FixedOffset>) -> Vec<DueRun> {
        let mut due = Vec::new();
        for entry in self.entries.values_mut() {
            let period = chrono::Duration::from_std(entry.period).unwrap_or(chrono::Duration::MAX);
            let mut slots = Vec::new();
            while entry.next_run <= now {
                slots.push(entry.next_run);
                entry.next_run += period;
            }
            let keep = (entry.max_concurrent.max(1) as usize).min(slots.len());
            let folded = slots.len() - keep;
            for (i, slot) in slots.into_iter().skip(folded).enumerate() {
                due.push(DueRun {
                    dataset_id: entry.dataset_id.clone(),
                    scheduled_for: slot,
                    coalesced: if i == 0 { folded as u32 } else { 0 },
                });
            }
        }
        due.sort_by(|a, b| a.scheduled_for.cmp(&b.scheduled_for).then_with(|| a.dataset_id.cmp(&b.dataset_id)));
        due
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t0() -> DateTime<FixedOffset> {
        DateTime::parse_from_rfc3339("2015-03-01T00:00:00+01:00").unwrap()
    }

    fn entry(id: &str, minutes: u64, max: u32) -> ScheduleEntry {
        ScheduleEntry {
            dataset_id: id.into(),
            next_run: t0(),
            period: Duration::from_secs(minutes * 60),
            max_concurrent: max,
        }
    }

    #[test]
    fn five_minute_feed_over_an_hour() {
        let mut s = Scheduler::new();
        s.upsert(entry("parking", 5, 1));
        let runs: usize = (0..60).map(|m| s.take_due(t0() + chrono::Duration::minutes(m)).len()).sum();
        assert_eq!(runs, 12);
        assert_eq!(s.entry("parking").unwrap().next_run, t0() + chrono::Duration::minutes(60));
    }

    #[test]
    fn catch_up_is_bounded() {
        let mut s = Scheduler::new();
        s.upsert(entry("a", 5, 3));
        s.upsert(entry("b", 60, 3));
        let due = s.take_due(t0() + chrono::Duration::minutes(55));
        assert_eq!(due.iter().filter(|d| d.dataset_id == "a").count(), 3);
        assert_eq!(due.iter().find(|d| d.dataset_id == "a").unwrap().coalesced, 9);
        assert_eq!(due.iter().filter(|d| d.dataset_id == "b").count(), 1);
        assert!(s.take_due(t0() + chrono::Duration::minutes(56)).is_empty());
    }
}
