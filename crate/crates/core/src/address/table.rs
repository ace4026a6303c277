use std::collections::BTreeMap;
use std::path::Path;

use super::{fold, AddressError};

/// Street-type tokens recognised as the leading qualifier of a street name.
pub const DUGS: &[&str] = &[
    "VIA", "VIALE", "PIAZZA", "PIAZZALE", "PIAZZETTA", "CORSO", "LARGO", "BORGO", "VICOLO",
    "LUNGARNO", "STRADA", "LOCALITA", "GALLERIA", "VIUZZO", "SALITA", "COSTA", "VIOTTOLO",
    "CHIASSO", "PIAGGIA", "CALLE",
];

const SEED: &[(&str, &str)] = &[
    ("P.ZZA", "PIAZZA"),
    ("P.ZA", "PIAZZA"),
    ("PZA", "PIAZZA"),
    ("P.ZZALE", "PIAZZALE"),
    ("P.LE", "PIAZZALE"),
    ("P.TTA", "PIAZZETTA"),
    ("V.LE", "VIALE"),
    ("C.SO", "CORSO"),
    ("L.GO", "LARGO"),
    ("B.GO", "BORGO"),
    ("V.LO", "VICOLO"),
    ("LOC.", "LOCALITA"),
    ("LUNG.NO", "LUNGARNO"),
    ("S.", "SANTA"),
    ("S", "SANTA"),
    ("S.TA", "SANTA"),
];

/// Key under which a token is looked up: uppercase, accents folded, every
/// non-alphanumeric character removed.
pub fn token_key(token: &str) -> String {
    fold(token).chars().filter(|c| c.is_alphanumeric()).collect()
}

/// Variant → canonical qualifier map. Canonical forms are single tokens and
/// never themselves variants, so expansion is idempotent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualifierTable {
    entries: BTreeMap<String, String>,
}

impl Default for QualifierTable {
    fn default() -> Self {
        Self::seed()
    }
}

impl QualifierTable {
    pub fn seed() -> Self {
        let mut table = QualifierTable {
            entries: BTreeMap::new(),
        };
        for (variant, canonical) in SEED {
            table.add(variant, canonical).expect("seed table is consistent");
        }
        table
    }

    pub fn empty() -> Self {
        QualifierTable {
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, variant: &str, canonical: &str) -> Result<(), AddressError> {
        let key = token_key(variant);
        let canonical = token_key(canonical);
        let bad = |reason: &str| AddressError::Table {
            line: 0,
            reason: format!("{variant} -> {canonical}: {reason}"),
        };
        if key.is_empty() || canonical.is_empty() {
            return Err(bad("empty entry"));
        }
        if key == canonical {
            return Ok(());
        }
        if self.entries.contains_key(&canonical) {
            return Err(bad("canonical form is itself a variant"));
        }
        if self.entries.values().any(|c| *c == key) {
            return Err(bad("variant is already a canonical form"));
        }
        self.entries.insert(key, canonical);
        Ok(())
    }

    /// Extends the table with a `variant<TAB>canonical` file. Blank lines and
    /// `#` comments are ignored.
    pub fn extend_from_str(&mut self, text: &str) -> Result<(), AddressError> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let with_line = |e: AddressError| match e {
                AddressError::Table { reason, .. } => AddressError::Table {
                    line: idx + 1,
                    reason,
                },
                other => other,
            };
            let Some((variant, canonical)) = line.split_once('\t') else {
                return Err(AddressError::Table {
                    line: idx + 1,
                    reason: "expected variant<TAB>canonical".into(),
                });
            };
            self.add(variant.trim(), canonical.trim()).map_err(with_line)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AddressError> {
        let text = std::fs::read_to_string(path).map_err(|source| AddressError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut table = Self::seed();
        table.extend_from_str(&text)?;
        Ok(table)
    }

    /// Canonical form of `token` if it is a known variant.
    pub fn lookup(&self, token: &str) -> Option<&str> {
        self.entries.get(&token_key(token)).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

pub fn is_dug(token: &str) -> bool {
    DUGS.contains(&token)
}
