//! Italian street-address parsing and canonicalisation.

mod civic;
mod table;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use civic::{parse_civic, render_civics, CivicColor, CivicNumber};
pub use table::{is_dug, token_key, QualifierTable, DUGS};

#[derive(Debug, Error)]
pub enum AddressError {
    #[error("qualifier table line {line}: {reason}")]
    Table { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Uppercases and folds Italian accented letters to their plain form.
pub fn fold(s: &str) -> String {
    s.chars()
        .flat_map(char::to_uppercase)
        .map(|c| match c {
            'À' | 'Á' | 'Â' | 'Ä' => 'A',
            'È' | 'É' | 'Ê' | 'Ë' => 'E',
            'Ì' | 'Í' | 'Î' | 'Ï' => 'I',
            'Ò' | 'Ó' | 'Ô' | 'Ö' => 'O',
            'Ù' | 'Ú' | 'Û' | 'Ü' => 'U',
            other => other,
        })
        .collect()
}

/// Light normalisation used for exact comparison: folded, trimmed, single
/// spaces. Punctuation and abbreviations are kept.
pub fn light(s: &str) -> String {
    fold(s).split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RawAddress {
    pub street_text: String,
    #[serde(default)]
    pub civic_text: String,
    #[serde(default)]
    pub municipality: String,
    #[serde(default)]
    pub cap: Option<String>,
}

impl RawAddress {
    pub fn new(street: &str, civic: &str, municipality: &str) -> Self {
        RawAddress {
            street_text: street.into(),
            civic_text: civic.into(),
            municipality: municipality.into(),
            cap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalizedAddress {
    pub qualifier: Option<String>,
    pub name_tokens: Vec<String>,
    pub civics: Vec<CivicNumber>,
    pub municipality: String,
    pub last_word_key: String,
    pub cap: Option<String>,
}

impl NormalizedAddress {
    /// Qualifier and name joined by single spaces.
    pub fn street(&self) -> String {
        self.qualifier.iter().chain(&self.name_tokens).cloned().collect::<Vec<_>>().join(" ")
    }

    pub fn name(&self) -> String {
        self.name_tokens.join(" ")
    }

    /// A raw address that normalises back to `self`.
    pub fn to_raw(&self) -> RawAddress {
        RawAddress {
            street_text: self.street(),
            civic_text: render_civics(&self.civics),
            municipality: self.municipality.clone(),
            cap: self.cap.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AddressFlag {
    /// An "Ang." (corner) annotation and everything after it was dropped.
    CornerStripped,
    /// A civic part was kept only as text.
    UncertainCivic,
    /// The street text held nothing but noise.
    EmptyStreet,
}

/// Replaces every known variant token by its canonical form and uppercases
/// the rest. Tokens end up separated by single spaces.
pub fn expand_qualifiers(s: &str, table: &QualifierTable) -> String {
    fold(s)
        .split_whitespace()
        .map(|t| table.lookup(t).unwrap_or(t).to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn is_corner_marker(token: &str) -> bool {
    let key = token_key(token);
    key == "ANGOLO" || (key.starts_with("ANG") && (token.starts_with("ANG.") || key == "ANG"))
}

/// Municipality name as compared across datasets: folded, punctuation
/// removed, single spaces.
pub fn municipality_key(s: &str) -> String {
    fold(s)
        .split_whitespace()
        .map(token_key)
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Normalises an address. See [`normalize_flagged`] for the flags raised.
pub fn normalize(raw: &RawAddress, table: &QualifierTable) -> NormalizedAddress {
    normalize_flagged(raw, table).0
}

/// Canonicalises an address: qualifiers expanded, noise characters deleted
/// (never turned into separators, so the token count cannot grow), corner
/// annotations dropped, the leading street type split off and the civic
/// field parsed.
pub fn normalize_flagged(raw: &RawAddress, table: &QualifierTable) -> (NormalizedAddress, Vec<AddressFlag>) {
    let mut flags = Vec::new();
    let folded = fold(&raw.street_text);
    let mut tokens: Vec<String> = Vec::new();
    for token in folded.split_whitespace() {
        if is_corner_marker(token) {
            flags.push(AddressFlag::CornerStripped);
            break;
        }
        let expanded = table.lookup(token).map(str::to_string).unwrap_or_else(|| token_key(token));
        if !expanded.is_empty() {
            tokens.push(expanded);
        }
    }
    if tokens.is_empty() {
        flags.push(AddressFlag::EmptyStreet);
    }
    let qualifier = match tokens.first() {
        Some(first) if tokens.len() > 1 && is_dug(first) => Some(tokens.remove(0)),
        _ => None,
    };
    let civics = parse_civic(&raw.civic_text);
    if civics.iter().any(|c| c.uncertain) {
        flags.push(AddressFlag::UncertainCivic);
    }
    let cap = raw
        .cap
        .as_deref()
        .map(|c| c.chars().filter(char::is_ascii_digit).collect::<String>())
        .filter(|c| !c.is_empty());
    let address = NormalizedAddress {
        last_word_key: tokens.last().cloned().unwrap_or_default(),
        qualifier,
        name_tokens: tokens,
        civics,
        municipality: municipality_key(&raw.municipality),
        cap,
    };
    (address, flags)
}

/// The name tokens as given plus, for names of two or more tokens, the
/// order with the final two tokens swapped (surname/name exchange).
pub fn name_orderings(addr: &NormalizedAddress) -> Vec<Vec<String>> {
    let original = addr.name_tokens.clone();
    let mut out = vec![original.clone()];
    let n = original.len();
    if n >= 2 {
        let mut swapped = original;
        swapped.swap(n - 2, n - 1);
        if swapped != out[0] {
            out.push(swapped);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(street: &str, civic: &str) -> NormalizedAddress {
        normalize(&RawAddress::new(street, civic, "Firenze"), &QualifierTable::seed())
    }

    #[test]
    fn qualifier_expansion() {
        let t = QualifierTable::seed();
        assert_eq!(expand_qualifiers("P.zza S. Croce", &t), "PIAZZA SANTA CROCE");
        assert_eq!(expand_qualifiers("PIAZZA SANTA CROCE", &t), "PIAZZA SANTA CROCE");
        assert_eq!(expand_qualifiers("Borgo Pinti", &t), "BORGO PINTI");
    }

    #[test]
    fn documented_addresses() {
        let a = norm("Via Papa Giovanni XXIII", "");
        assert_eq!(a.name_tokens, ["PAPA", "GIOVANNI", "XXIII"]);
        let b = norm("VIA DELLA VIGNA NUOVA", "40/R-42/R");
        assert_eq!(b.qualifier.as_deref(), Some("VIA"));
        assert_eq!(b.last_word_key, "NUOVA");
        assert_eq!(b.civics, vec![CivicNumber::red(40), CivicNumber::red(42)]);
        assert_eq!(b.municipality, "FIRENZE");
        assert_eq!(norm("VIA ROSSI- /°", "").name_tokens, ["ROSSI"]);
    }

    #[test]
    fn corner_annotations_are_dropped_and_flagged() {
        let (a, flags) = normalize_flagged(
            &RawAddress::new("Via Roma ang. Via Verdi", "3", "Prato"),
            &QualifierTable::seed(),
        );
        assert_eq!(a.name_tokens, ["ROMA"]);
        assert_eq!(flags, vec![AddressFlag::CornerStripped]);
    }

    #[test]
    fn accents_fold() {
        assert_eq!(norm("Via dell'Università", "").name_tokens, ["DELLUNIVERSITA"]);
        let raw = RawAddress::new("Via Roma", "", "Città di  Castello");
        assert_eq!(normalize(&raw, &QualifierTable::seed()).municipality, "CITTA DI CASTELLO");
    }

    #[test]
    fn orderings_swap_the_last_pair_only() {
        let a = norm("Via Petrarca Francesco", "");
        assert_eq!(
            name_orderings(&a),
            vec![vec!["PETRARCA".to_string(), "FRANCESCO".into()], vec!["FRANCESCO".into(), "PETRARCA".into()]]
        );
        assert_eq!(name_orderings(&norm("Via Roma", "")).len(), 1);
        assert_eq!(name_orderings(&norm("Via Roma Roma", "")).len(), 1);
    }

    #[test]
    fn table_rejects_chains() {
        let mut t = QualifierTable::seed();
        assert!(t.add("PIAZZA", "PZZ").is_err());
        assert!(t.extend_from_str("VLE\tVIALE\n# comment\n\nBGO\tBORGO\n").is_ok());
        assert_eq!(t.lookup("bgo"), Some("BORGO"));
        assert!(matches!(t.extend_from_str("oops"), Err(AddressError::Table { line: 1, .. })));
    }
}
