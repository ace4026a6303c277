use std::fmt;

use serde::{Deserialize, Serialize};

use super::fold;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CivicColor {
    Black,
    Red,
    None,
}

impl CivicColor {
    /// Catalog class code (`classCode`) for this color.
    pub fn class_code(self) -> Option<&'static str> {
        match self {
            CivicColor::Black => Some("Black"),
            CivicColor::Red => Some("Red"),
            CivicColor::None => None,
        }
    }

    pub fn from_class_code(code: &str) -> CivicColor {
        if code.eq_ignore_ascii_case("red") || code.eq_ignore_ascii_case("r") {
            CivicColor::Red
        } else {
            CivicColor::Black
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CivicNumber {
    /// Absent for SNC, zero, empty and digit-less input.
    pub value: Option<u32>,
    pub suffix: Option<String>,
    pub color: CivicColor,
    /// Set when part of the input could not be read as a number with a
    /// plain suffix.
    pub uncertain: bool,
}

impl CivicNumber {
    pub fn absent() -> Self {
        CivicNumber {
            value: None,
            suffix: None,
            color: CivicColor::None,
            uncertain: false,
        }
    }

    pub fn black(value: u32) -> Self {
        CivicNumber {
            value: Some(value),
            suffix: None,
            color: CivicColor::Black,
            uncertain: false,
        }
    }

    pub fn red(value: u32) -> Self {
        CivicNumber {
            color: CivicColor::Red,
            ..Self::black(value)
        }
    }

    pub fn with_suffix(mut self, suffix: &str) -> Self {
        self.suffix = Some(suffix.to_string());
        self
    }

    /// True when a service civic designates this catalog civic: same value
    /// and the same numbering system, an uncolored civic counting as black.
    pub fn matches_catalog(&self, catalog: &CivicNumber) -> bool {
        let system = |c: CivicColor| if c == CivicColor::Red { CivicColor::Red } else { CivicColor::Black };
        self.value.is_some() && self.value == catalog.value && system(self.color) == system(catalog.color)
    }
}

/// Renders the civic so that [`parse_civic`] reads it back unchanged.
impl fmt::Display for CivicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.value, &self.suffix) {
            (None, None) => return f.write_str("SNC"),
            (None, Some(s)) => f.write_str(s)?,
            (Some(v), None) => write!(f, "{v}")?,
            (Some(v), Some(s)) => write!(f, "{v}/{s}")?,
        }
        if self.color == CivicColor::Red {
            f.write_str("/R")?;
        }
        Ok(())
    }
}

pub fn render_civics(civics: &[CivicNumber]) -> String {
    civics.iter().map(ToString::to_string).collect::<Vec<_>>().join("-")
}

const ABSENT_MARKERS: &[&str] = &["SNC", "SN", "SENZANUMERO", "SENZANUMEROCIVICO"];

fn plain_suffix(s: &str) -> bool {
    !s.is_empty() && s.len() <= 8 && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == ' ')
}

fn parse_part(part: &str) -> Option<CivicNumber> {
    let mut p = part.trim().trim_start_matches(|c: char| c == '/' || c.is_whitespace()).to_string();
    if p.is_empty() {
        return None;
    }
    let compact: String = p.chars().filter(|c| c.is_alphanumeric()).collect();
    if ABSENT_MARKERS.contains(&compact.as_str()) {
        return Some(CivicNumber::absent());
    }
    let mut color = CivicColor::Black;
    if let Some(rest) = p.strip_suffix("/R") {
        color = CivicColor::Red;
        p = rest.trim_end().to_string();
    } else if let Some(rest) = p.strip_suffix('R') {
        let rest = rest.trim_end_matches(|c: char| c == '/' || c.is_whitespace());
        if rest.ends_with(|c: char| c.is_ascii_digit()) {
            color = CivicColor::Red;
            p = rest.to_string();
        }
    }
    let digits: String = p.chars().take_while(|c| c.is_ascii_digit()).collect();
    let value = digits.parse::<u32>().ok().filter(|&v| v > 0);
    let rest = p[digits.len()..].trim_start_matches(|c: char| c == '/' || c.is_whitespace()).trim_end();
    let residue = match value {
        Some(_) => rest,
        None if digits.is_empty() => rest,
        None if rest.is_empty() && digits.chars().all(|c| c == '0') => "",
        // Zero or an oversized number followed by text: keep it all.
        None => p.trim(),
    };
    let suffix = (!residue.is_empty()).then(|| residue.to_string());
    let color = if value.is_some() { color } else { CivicColor::None };
    let uncertain = match (&value, &suffix) {
        (_, None) => false,
        (None, Some(_)) => true,
        (Some(_), Some(s)) => !plain_suffix(s),
    };
    Some(CivicNumber {
        value,
        suffix,
        color,
        uncertain,
    })
}

/// Parses a civic-number field into one or more civics. Never fails: ranges
/// split on `-`, SNC/0/empty give one absent civic, and unreadable text is
/// kept as a flagged suffix.
pub fn parse_civic(s: &str) -> Vec<CivicNumber> {
    let text = fold(s);
    let mut out: Vec<CivicNumber> = Vec::new();
    for civic in text.split('-').filter_map(parse_part) {
        if !out.contains(&civic) {
            out.push(civic);
        }
    }
    if out.len() > 1 {
        out.retain(|c| *c != CivicNumber::absent());
    }
    if out.is_empty() {
        out.push(CivicNumber::absent());
    }
    out
}
