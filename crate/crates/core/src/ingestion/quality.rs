//! Per-field quality improvement of staged records.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Change, IngestError, StagedRecord};
use crate::address::{normalize_flagged, render_civics, AddressFlag, QualifierTable, RawAddress};

pub const FLAG_ONLY: &str = "flag-only";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "rule")]
pub enum FieldRule {
    /// Day-first numeric dates to ISO `YYYY-MM-DD`.
    Date,
    /// `9.30`, `9,30`, `09:30` to `HH:MM`.
    Time,
    /// Whitespace collapse and title case.
    Locality,
    /// Street normalisation; the civic column, if any, is re-rendered.
    Address { civic_column: Option<String> },
    Url,
    Email,
    /// Telephone or fax numbers.
    Phone,
    /// Italian postal code, exactly five digits.
    Cap,
    /// ATECO activity code, format only.
    Ateco,
    /// Trim and collapse whitespace.
    Text,
}

impl FieldRule {
    pub fn id(&self) -> &'static str {
        match self {
            FieldRule::Date => "date-dmy",
            FieldRule::Time => "time-hm",
            FieldRule::Locality => "locality-case",
            FieldRule::Address { .. } => "address-normalize",
            FieldRule::Url => "url-scheme",
            FieldRule::Email => "email-lower",
            FieldRule::Phone => "phone-it",
            FieldRule::Cap => "cap-5digit",
            FieldRule::Ateco => "ateco-format",
            FieldRule::Text => "text-trim",
        }
    }

    fn parse(name: &str, arg: Option<&str>) -> Option<Self> {
        Some(match name {
            "date" => FieldRule::Date,
            "time" => FieldRule::Time,
            "locality" => FieldRule::Locality,
            "address" => FieldRule::Address {
                civic_column: arg.map(str::to_string),
            },
            "url" => FieldRule::Url,
            "email" => FieldRule::Email,
            "phone" | "fax" => FieldRule::Phone,
            "cap" => FieldRule::Cap,
            "ateco" => FieldRule::Ateco,
            "text" => FieldRule::Text,
            _ => return None,
        })
    }
}

/// Rules by column.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: BTreeMap<String, FieldRule>,
}

impl RuleSet {
    /// `column<TAB>rule[<TAB>argument]` per line; the address rule takes the
    /// civic column as argument.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut set = RuleSet::default();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
            let err = |reason: String| IngestError::Rules { line: idx + 1, reason };
            let (column, rule) = match cols[..] {
                [c, r] => (c, FieldRule::parse(r, None)),
                [c, r, a] => (c, FieldRule::parse(r, Some(a))),
                _ => return Err(err(format!("expected 2 or 3 columns, found {}", cols.len()))),
            };
            let rule = rule.ok_or_else(|| err(format!("unknown rule {:?}", cols[1])))?;
            set.rules.insert(column.to_string(), rule);
        }
        Ok(set)
    }

    /// Guesses rules from Italian and English column names.
    pub fn for_columns<'a>(columns: impl IntoIterator<Item = &'a str>) -> Self {
        let columns: Vec<&str> = columns.into_iter().collect();
        let civic = columns
            .iter()
            .find(|c| matches!(c.to_ascii_lowercase().as_str(), "civico" | "civic" | "civicnumber" | "numero"))
            .map(|c| c.to_string());
        let mut set = RuleSet::default();
        for c in &columns {
            let lower = c.to_ascii_lowercase();
            let rule = match lower.as_str() {
                "data" | "date" => FieldRule::Date,
                "ora" | "orario" | "time" => FieldRule::Time,
                "comune" | "localita" | "locality" | "municipality" => FieldRule::Locality,
                "indirizzo" | "via" | "address" | "streetaddress" => FieldRule::Address {
                    civic_column: civic.clone(),
                },
                "url" | "sito" | "website" => FieldRule::Url,
                "email" | "mail" => FieldRule::Email,
                "telefono" | "tel" | "phone" | "fax" => FieldRule::Phone,
                "cap" | "zip" | "postalcode" => FieldRule::Cap,
                "ateco" | "atecocode" => FieldRule::Ateco,
                _ => continue,
            };
            set.rules.insert(c.to_string(), rule);
        }
        set
    }
}

enum Outcome {
    Keep,
    Set(String),
    Flag(&'static str),
}

fn collapse(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn clean_date(v: &str) -> Outcome {
    let t = v.trim();
    if NaiveDate::parse_from_str(t, "%Y-%m-%d").is_ok() {
        return if t == v { Outcome::Keep } else { Outcome::Set(t.into()) };
    }
    let parts: Vec<&str> = t.split(['/', '-', '.']).collect();
    let [d, m, y] = parts[..] else { return Outcome::Flag("unrecognised date") };
    let num = |s: &str| (!s.is_empty() && s.len() <= 4 && s.bytes().all(|b| b.is_ascii_digit())).then(|| s.parse::<i32>().unwrap());
    let (Some(d), Some(m), Some(mut y)) = (num(d), num(m), num(y)) else {
        return Outcome::Flag("unrecognised date");
    };
    if parts[2].len() == 2 {
        y += 2000;
    } else if parts[2].len() != 4 {
        return Outcome::Flag("unrecognised year");
    }
    match NaiveDate::from_ymd_opt(y, m as u32, d as u32) {
        Some(date) => Outcome::Set(date.format("%Y-%m-%d").to_string()),
        None => Outcome::Flag("no such day"),
    }
}

fn clean_time(v: &str) -> Outcome {
    let t = v.trim();
    let Some((h, m)) = t.split_once([':', '.', ',']) else {
        return Outcome::Flag("unrecognised time");
    };
    let m = m.split(':').next().unwrap_or(m);
    match (h.parse::<u32>(), m.parse::<u32>()) {
        (Ok(h), Ok(m)) if h < 24 && m < 60 => {
            let out = format!("{h:02}:{m:02}");
            if out == v {
                Outcome::Keep
            } else {
                Outcome::Set(out)
            }
        }
        _ => Outcome::Flag("unrecognised time"),
    }
}

fn title_case(s: &str) -> String {
    collapse(s)
        .split(' ')
        .map(|w| {
            let mut chars = w.chars();
            match chars.next() {
                Some(first) => first.to_uppercase().chain(chars.flat_map(char::to_lowercase)).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn clean_url(v: &str) -> Outcome {
    let t = v.trim();
    let lower = t.to_ascii_lowercase();
    let with_scheme = if lower.starts_with("http://") || lower.starts_with("https://") {
        t.to_string()
    } else if lower.starts_with("www.") || (t.contains('.') && !t.contains(' ') && !t.contains('@')) {
        format!("http://{t}")
    } else {
        return Outcome::Flag("not a web address");
    };
    let host = with_scheme.split("://").nth(1).unwrap_or("").split('/').next().unwrap_or("");
    if host.is_empty() || !host.contains('.') || host.contains(char::is_whitespace) {
        return Outcome::Flag("not a web address");
    }
    if with_scheme == v {
        Outcome::Keep
    } else {
        Outcome::Set(with_scheme)
    }
}

fn clean_email(v: &str) -> Outcome {
    let t = v.trim();
    let t = t.strip_prefix("mailto:").unwrap_or(t).to_lowercase();
    let ok = match t.split_once('@') {
        Some((local, domain)) => {
            !local.is_empty()
                && !domain.contains('@')
                && domain.contains('.')
                && !domain.starts_with('.')
                && !domain.ends_with('.')
                && !t.contains(char::is_whitespace)
        }
        None => false,
    };
    match ok {
        false => Outcome::Flag("not an e-mail address"),
        true if t == v => Outcome::Keep,
        true => Outcome::Set(t),
    }
}

fn clean_phone(v: &str) -> Outcome {
    let t = v.trim();
    let stripped: String = t.chars().filter(|c| !matches!(c, ' ' | '.' | '-' | '/' | '(' | ')')).collect();
    let (plus, digits) = if let Some(rest) = stripped.strip_prefix("+39") {
        (true, rest.to_string())
    } else if let Some(rest) = stripped.strip_prefix("0039") {
        (true, rest.to_string())
    } else {
        (false, stripped.clone())
    };
    if !digits.bytes().all(|b| b.is_ascii_digit()) || digits.is_empty() {
        return Outcome::Flag("not a telephone number");
    }
    if !(plus || (9..=10).contains(&digits.len())) {
        return Outcome::Flag("not a national number");
    }
    let out = format!("+39{digits}");
    if out == v {
        Outcome::Keep
    } else {
        Outcome::Set(out)
    }
}

fn clean_cap(v: &str) -> Outcome {
    let t: String = v.chars().filter(|c| !c.is_whitespace()).collect();
    if t.len() == 5 && t.bytes().all(|b| b.is_ascii_digit()) {
        if t == v {
            Outcome::Keep
        } else {
            Outcome::Set(t)
        }
    } else {
        Outcome::Flag("postal code must be exactly 5 digits")
    }
}

fn clean_ateco(v: &str) -> Outcome {
    let t: String = v.chars().filter(|c| !c.is_whitespace()).collect();
    let parts: Vec<&str> = t.split('.').collect();
    let digits: usize = parts.iter().map(|p| p.len()).sum();
    let ok = parts.len() <= 3
        && parts.iter().all(|p| !p.is_empty() && p.len() <= 2 && p.bytes().all(|b| b.is_ascii_digit()))
        && parts[0].len() == 2
        && (2..=6).contains(&digits);
    match ok {
        false => Outcome::Flag("not a dotted 2-6 digit activity code"),
        true if t == v => Outcome::Keep,
        true => Outcome::Set(t),
    }
}

fn clean_text(v: &str) -> Outcome {
    let out = collapse(v);
    if out == v {
        Outcome::Keep
    } else {
        Outcome::Set(out)
    }
}

/// Applies `rules` to the clean fields of `record`. Raw cells are left
/// untouched; every change, and every field that could not be fixed, is
/// appended to the change log.
pub fn quality_improve(record: &StagedRecord, rules: &RuleSet, table: &QualifierTable) -> StagedRecord {
    let mut out = record.clone();
    let mut log = |column: &str, before: &str, after: &str, rule_id: &str, note: Option<&str>| {
        out.change_log.push(Change {
            column: column.to_string(),
            before: before.to_string(),
            after: after.to_string(),
            rule_id: rule_id.to_string(),
            note: note.map(str::to_string),
        })
    };
    let mut clean = record.clean_fields.clone();
    for (column, rule) in &rules.rules {
        let Some(value) = record.clean_fields.get(column).cloned() else { continue };
        if value.trim().is_empty() {
            continue;
        }
        let outcome = match rule {
            FieldRule::Date => clean_date(&value),
            FieldRule::Time => clean_time(&value),
            FieldRule::Locality => match title_case(&value) {
                t if t == value => Outcome::Keep,
                t => Outcome::Set(t),
            },
            FieldRule::Url => clean_url(&value),
            FieldRule::Email => clean_email(&value),
            FieldRule::Phone => clean_phone(&value),
            FieldRule::Cap => clean_cap(&value),
            FieldRule::Ateco => clean_ateco(&value),
            FieldRule::Text => clean_text(&value),
            FieldRule::Address { civic_column } => {
                let civic_before = civic_column.as_ref().and_then(|c| record.clean_fields.get(c)).cloned();
                let raw = RawAddress::new(&value, civic_before.as_deref().unwrap_or(""), "");
                let (normalized, flags) = normalize_flagged(&raw, table);
                if let (Some(col), Some(before)) = (civic_column, &civic_before) {
                    let after = render_civics(&normalized.civics);
                    if &after != before && !before.trim().is_empty() {
                        log(col, before, &after, rule.id(), None);
                        clean.insert(col.clone(), after);
                    }
                    if flags.contains(&AddressFlag::UncertainCivic) {
                        log(col, before, before, FLAG_ONLY, Some("uncertain civic number"));
                    }
                }
                if flags.contains(&AddressFlag::EmptyStreet) {
                    Outcome::Flag("no street name")
                } else {
                    match normalized.street() {
                        s if s == value => Outcome::Keep,
                        s => Outcome::Set(s),
                    }
                }
            }
        };
        match outcome {
            Outcome::Keep => {}
            Outcome::Set(after) => {
                log(column, &value, &after, rule.id(), None);
                clean.insert(column.clone(), after);
            }
            Outcome::Flag(reason) => log(column, &value, &value, FLAG_ONLY, Some(&format!("{}: {reason}", rule.id()))),
        }
    }
    out.clean_fields = clean;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(fields: &[(&str, &str)]) -> StagedRecord {
        StagedRecord::new(
            "d",
            "k",
            fields.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            1,
            chrono::DateTime::parse_from_rfc3339("2015-01-01T00:00:00Z").unwrap(),
        )
    }

    fn one(rule: FieldRule, value: &str) -> StagedRecord {
        let rules = RuleSet {
            rules: [("F".to_string(), rule)].into_iter().collect(),
        };
        quality_improve(&record(&[("F", value)]), &rules, &QualifierTable::seed())
    }

    #[test]
    fn day_first_dates() {
        assert_eq!(one(FieldRule::Date, "01/03/2015").clean_fields["F"], "2015-03-01");
        assert_eq!(one(FieldRule::Date, "1.3.15").clean_fields["F"], "2015-03-01");
        assert_eq!(one(FieldRule::Date, "31/02/2015").change_log[0].rule_id, FLAG_ONLY);
    }

    #[test]
    fn cap_needs_five_digits() {
        let r = one(FieldRule::Cap, "5014");
        assert_eq!(r.clean_fields["F"], "5014");
        assert_eq!(r.change_log[0].rule_id, FLAG_ONLY);
        assert!(one(FieldRule::Cap, "50142").change_log.is_empty());
    }

    #[test]
    fn phones_emails_urls_times() {
        assert_eq!(one(FieldRule::Phone, "(055) 27.57.10").clean_fields["F"], "+39055275710");
        assert_eq!(one(FieldRule::Phone, "055 2757100").clean_fields["F"], "+390552757100");
        assert_eq!(one(FieldRule::Phone, "12").change_log[0].rule_id, FLAG_ONLY);
        assert_eq!(one(FieldRule::Email, " Info@Comune.FI.it").clean_fields["F"], "info@comune.fi.it");
        assert_eq!(one(FieldRule::Url, "www.comune.fi.it").clean_fields["F"], "http://www.comune.fi.it");
        assert_eq!(one(FieldRule::Time, "9.30").clean_fields["F"], "09:30");
        assert_eq!(one(FieldRule::Ateco, "47.11.10").change_log, vec![]);
        assert_eq!(one(FieldRule::Ateco, "4711100").change_log[0].rule_id, FLAG_ONLY);
    }

    #[test]
    fn clean_input_is_a_fixed_point() {
        let r = one(FieldRule::Date, "2015-03-01");
        assert_eq!(r.clean_fields, *r.raw_fields());
        assert!(r.change_log.is_empty());
    }

    #[test]
    fn address_delegates_to_normalizer() {
        let rules = RuleSet::for_columns(["INDIRIZZO", "CIVICO", "COMUNE"]);
        let r = quality_improve(
            &record(&[("INDIRIZZO", "P.zza della Signoria"), ("CIVICO", "5 r"), ("COMUNE", "FIRENZE")]),
            &rules,
            &QualifierTable::seed(),
        );
        assert_eq!(r.clean_fields["INDIRIZZO"], "PIAZZA DELLA SIGNORIA");
        assert_eq!(r.clean_fields["CIVICO"], "5/R");
        assert_eq!(r.clean_fields["COMUNE"], "Firenze");
        assert_eq!(r.raw_fields()["CIVICO"], "5 r");
        assert!(r.change_log.iter().all(|c| c.rule_id != FLAG_ONLY));
    }
}
