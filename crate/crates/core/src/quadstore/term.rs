use std::fmt;
use std::sync::Arc;

use chrono::{DateTime, FixedOffset, SecondsFormat};
use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::vocab::XSD;

/// An absolute identifier. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(Arc<str>);

impl Iri {
    /// Validates that `value` is non-empty, has a scheme and contains no
    /// whitespace or N-Quads delimiters.
    pub fn new(value: impl AsRef<str>) -> Result<Self, StoreError> {
        let value = value.as_ref();
        if !is_valid_iri(value) {
            return Err(StoreError::InvalidIri(value.to_string()));
        }
        Ok(Iri(Arc::from(value)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

fn is_valid_iri(value: &str) -> bool {
    let Some((scheme, rest)) = value.split_once(':') else {
        return false;
    };
    let mut chars = scheme.chars();
    let scheme_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    scheme_ok
        && !rest.is_empty()
        && !value
            .chars()
            .any(|c| c.is_whitespace() || c.is_control() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '\\' | '^' | '`'))
}

impl TryFrom<String> for Iri {
    type Error = StoreError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Iri::new(value)
    }
}

impl From<Iri> for String {
    fn from(iri: Iri) -> Self {
        iri.0.to_string()
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}>", self.0)
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Datatype {
    String,
    Integer,
    Decimal,
    DateTime,
    Boolean,
}

impl Datatype {
    pub fn iri(self) -> String {
        format!("{XSD}{}", self.local_name())
    }

    pub fn local_name(self) -> &'static str {
        match self {
            Datatype::String => "string",
            Datatype::Integer => "integer",
            Datatype::Decimal => "decimal",
            Datatype::DateTime => "dateTime",
            Datatype::Boolean => "boolean",
        }
    }

    pub fn from_local_name(name: &str) -> Option<Self> {
        Some(match name {
            "string" => Datatype::String,
            "integer" => Datatype::Integer,
            "decimal" | "double" | "float" => Datatype::Decimal,
            "dateTime" => Datatype::DateTime,
            "boolean" => Datatype::Boolean,
            _ => return None,
        })
    }

    pub fn from_iri(iri: &str) -> Option<Self> {
        iri.strip_prefix(XSD).and_then(Self::from_local_name)
    }

    /// Whether `lexical` is a valid lexical form of this datatype.
    pub fn accepts(self, lexical: &str) -> bool {
        match self {
            Datatype::String => true,
            Datatype::Integer => {
                let digits = lexical.strip_prefix(['+', '-']).unwrap_or(lexical);
                !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
            }
            Datatype::Decimal => is_decimal(lexical),
            Datatype::DateTime => DateTime::parse_from_rfc3339(lexical).is_ok(),
            Datatype::Boolean => matches!(lexical, "true" | "false" | "1" | "0"),
        }
    }
}

fn is_decimal(lexical: &str) -> bool {
    let body = lexical.strip_prefix(['+', '-']).unwrap_or(lexical);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    match frac {
        None => !int.is_empty() && all_digits(int),
        Some(f) => (!int.is_empty() || !f.is_empty()) && all_digits(int) && all_digits(f),
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    lexical: String,
    datatype: Datatype,
}

impl Literal {
    pub fn new(lexical: impl Into<String>, datatype: Datatype) -> Result<Self, StoreError> {
        let lexical = lexical.into();
        if !datatype.accepts(&lexical) {
            return Err(StoreError::InvalidLiteral { lexical, datatype });
        }
        Ok(Literal { lexical, datatype })
    }

    pub fn string(value: impl Into<String>) -> Self {
        Literal {
            lexical: value.into(),
            datatype: Datatype::String,
        }
    }

    pub fn integer(value: i64) -> Self {
        Literal {
            lexical: value.to_string(),
            datatype: Datatype::Integer,
        }
    }

    /// Panics on non-finite input.
    pub fn decimal(value: f64) -> Self {
        assert!(value.is_finite(), "decimal literal must be finite");
        let mut lexical = format!("{value}");
        if lexical == "-0" {
            lexical = "0".to_string();
        }
        Literal {
            lexical,
            datatype: Datatype::Decimal,
        }
    }

    pub fn boolean(value: bool) -> Self {
        Literal {
            lexical: value.to_string(),
            datatype: Datatype::Boolean,
        }
    }

    /// Millisecond precision, offset preserved.
    pub fn date_time(value: DateTime<FixedOffset>) -> Self {
        Literal {
            lexical: value.to_rfc3339_opts(SecondsFormat::Millis, false),
            datatype: Datatype::DateTime,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self.datatype {
            Datatype::Decimal | Datatype::Integer => self.lexical.parse().ok(),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self.datatype {
            Datatype::Integer => self.lexical.trim_start_matches('+').parse().ok(),
            _ => None,
        }
    }

    pub fn as_date_time(&self) -> Option<DateTime<FixedOffset>> {
        match self.datatype {
            Datatype::DateTime => DateTime::parse_from_rfc3339(&self.lexical).ok(),
            _ => None,
        }
    }
}

impl fmt::Debug for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}^^{}", self.lexical, self.datatype.local_name())
    }
}

/// Object position of a quad.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(iri) => Some(iri),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(lit) => Some(lit),
            Term::Iri(_) => None,
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => iri.fmt(f),
            Term::Literal(lit) => lit.fmt(f),
        }
    }
}

impl From<Iri> for Term {
    fn from(iri: Iri) -> Self {
        Term::Iri(iri)
    }
}

impl From<Literal> for Term {
    fn from(lit: Literal) -> Self {
        Term::Literal(lit)
    }
}

/// A subject-predicate-object statement tagged with the context (named
/// graph) it was loaded into. Field order gives the s,p,o,c sort order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Quad {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
    pub context: Iri,
}

impl Quad {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>, context: Iri) -> Self {
        Quad {
            subject,
            predicate,
            object: object.into(),
            context,
        }
    }

    /// Builds a quad from unchecked strings, validating each IRI.
    pub fn from_parts(
        subject: &str,
        predicate: &str,
        object: impl Into<Term>,
        context: &str,
    ) -> Result<Self, StoreError> {
        let build = || -> Result<Quad, StoreError> {
            Ok(Quad::new(Iri::new(subject)?, Iri::new(predicate)?, object, Iri::new(context)?))
        };
        build().map_err(|err| StoreError::MalformedQuad {
            quad: format!("{subject} {predicate} ... {context}"),
            reason: err.to_string(),
        })
    }
}

impl fmt::Debug for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} {:?} {:?} {:?}",
            self.subject, self.predicate, self.object, self.context
        )
    }
}

/// WGS84 coordinates in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    long: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, long: f64) -> Result<Self, StoreError> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&long) {
            return Err(StoreError::InvalidCoordinates { lat, long });
        }
        Ok(GeoPoint { lat, long })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn long(&self) -> f64 {
        self.long
    }
}
