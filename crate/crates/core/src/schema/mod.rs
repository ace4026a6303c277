//! The km4City class and property model with cardinality and value
//! constraints, and validation of entity subgraphs against it.

pub mod fixtures;
mod km4city;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadstore::{Datatype, Iri, Quad, Term};
use crate::vocab;

pub use km4city::load_schema;

#[derive(Debug, Error, PartialEq)]
pub enum SchemaError {
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("unknown property {0:?}")]
    UnknownProperty(String),
}

/// The seven top-level areas of the ontology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MacroClass {
    Administration,
    StreetGuide,
    PointOfInterest,
    LocalPublicTransport,
    Sensors,
    Temporal,
    Metadata,
}

impl MacroClass {
    pub const ALL: [MacroClass; 7] = [
        MacroClass::Administration,
        MacroClass::StreetGuide,
        MacroClass::PointOfInterest,
        MacroClass::LocalPublicTransport,
        MacroClass::Sensors,
        MacroClass::Temporal,
        MacroClass::Metadata,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MacroClass::Administration => "Administration",
            MacroClass::StreetGuide => "StreetGuide",
            MacroClass::PointOfInterest => "PointOfInterest",
            MacroClass::LocalPublicTransport => "LocalPublicTransport",
            MacroClass::Sensors => "Sensors",
            MacroClass::Temporal => "Temporal",
            MacroClass::Metadata => "Metadata",
        }
    }

    /// Human-readable name used in reports.
    pub fn label(self) -> &'static str {
        match self {
            MacroClass::Administration => "Administration",
            MacroClass::StreetGuide => "Street-guide",
            MacroClass::PointOfInterest => "Point of Interest",
            MacroClass::LocalPublicTransport => "Local Public Transport",
            MacroClass::Sensors => "Sensors",
            MacroClass::Temporal => "Temporal",
            MacroClass::Metadata => "Metadata",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        MacroClass::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s) || m.label().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for MacroClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PropertyKind {
    Object,
    Data,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Range {
    Class(String),
    Scalar(Datatype),
    /// Any resource; used for properties pointing outside the model.
    Resource,
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Range::Class(c) => f.write_str(c),
            Range::Scalar(dt) => write!(f, "xsd:{}", dt.local_name()),
            Range::Resource => f.write_str("Resource"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyConstraint {
    pub property: String,
    pub kind: PropertyKind,
    pub range: Range,
    pub min_card: u32,
    /// `None` is unbounded.
    pub max_card: Option<u32>,
    pub allowed_values: Option<Vec<String>>,
}

impl PropertyConstraint {
    pub fn iri(&self) -> String {
        vocab::property_iri(&self.property)
    }

    pub fn admits_count(&self, n: u32) -> bool {
        n >= self.min_card && self.max_card.is_none_or(|max| n <= max)
    }
}

impl fmt::Display for PropertyConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let max = self.max_card.map_or("*".to_string(), |m| m.to_string());
        write!(f, "{}:{}[{}..{}]", self.property, self.range, self.min_card, max)?;
        if let Some(values) = &self.allowed_values {
            write!(f, "{{{}}}", values.join("|"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassDef {
    pub name: String,
    pub macroclass: MacroClass,
    pub parent: Option<String>,
    pub constraints: Vec<PropertyConstraint>,
}

impl ClassDef {
    pub fn iri(&self) -> String {
        vocab::km4c(&self.name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ViolationKind {
    TooFewValues,
    TooManyValues,
    DisallowedValue,
    /// Literal where a resource is expected, or vice versa, or a literal of
    /// another datatype.
    WrongTermKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViolationReport {
    pub entity: Iri,
    pub constraint: PropertyConstraint,
    pub observed_count: u32,
    pub kind: ViolationKind,
    pub severity: Severity,
}

/// Immutable class model.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    classes: BTreeMap<String, ClassDef>,
    properties: BTreeMap<String, (PropertyKind, Range)>,
}

impl Schema {
    pub(crate) fn from_classes(classes: Vec<ClassDef>) -> Self {
        let mut properties = BTreeMap::new();
        let mut map = BTreeMap::new();
        for class in classes {
            for c in &class.constraints {
                properties
                    .entry(c.property.clone())
                    .or_insert((c.kind, c.range.clone()));
            }
            let name = class.name.clone();
            assert!(map.insert(name.clone(), class).is_none(), "duplicate class {name}");
        }
        let schema = Schema {
            classes: map,
            properties,
        };
        for class in schema.classes.values() {
            if let Some(parent) = &class.parent {
                assert!(schema.classes.contains_key(parent), "{} has unknown parent {parent}", class.name);
            }
            assert!(!schema.ancestors(&class.name).contains(&class.name.as_str()), "cycle at {}", class.name);
        }
        schema
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDef> {
        self.classes.values()
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.get(name)
    }

    pub fn has_property(&self, name: &str) -> bool {
        self.properties.contains_key(name)
    }

    pub fn property(&self, name: &str) -> Option<(PropertyKind, &Range)> {
        self.properties.get(name).map(|(k, r)| (*k, r))
    }

    pub fn macroclasses(&self) -> BTreeSet<MacroClass> {
        self.classes.values().map(|c| c.macroclass).collect()
    }

    /// Ancestors of `name`, nearest first, excluding `name` itself.
    pub fn ancestors(&self, name: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.classes.get(name).and_then(|c| c.parent.as_deref());
        while let Some(parent) = cur {
            if out.contains(&parent) || out.len() > self.classes.len() {
                break;
            }
            out.push(parent);
            cur = self.classes.get(parent).and_then(|c| c.parent.as_deref());
        }
        out
    }

    pub fn is_subclass_of(&self, class: &str, ancestor: &str) -> bool {
        class == ancestor || self.ancestors(class).contains(&ancestor)
    }

    /// `name` and every class below it.
    pub fn subclasses(&self, name: &str) -> Vec<&str> {
        self.classes
            .keys()
            .filter(|c| self.is_subclass_of(c, name))
            .map(String::as_str)
            .collect()
    }

    /// Constraints of `name` plus inherited ones; a class's own constraint on
    /// a property shadows its ancestors'.
    pub fn effective_constraints(&self, name: &str) -> Result<Vec<&PropertyConstraint>, SchemaError> {
        let class = self
            .classes
            .get(name)
            .ok_or_else(|| SchemaError::UnknownClass(name.to_string()))?;
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let chain = std::iter::once(class)
            .chain(self.ancestors(name).into_iter().map(|a| &self.classes[a]));
        for c in chain {
            for constraint in &c.constraints {
                if seen.insert(constraint.property.as_str()) {
                    out.push(constraint);
                }
            }
        }
        Ok(out)
    }

    /// Checks the statements about `entity` in `quads` against every
    /// constraint of `root_class`. Empty iff the entity conforms.
    pub fn validate_entity(
        &self,
        entity: &Iri,
        quads: &[Quad],
        root_class: &str,
    ) -> Result<Vec<ViolationReport>, SchemaError> {
        let constraints = self.effective_constraints(root_class)?;
        let mut reports = Vec::new();
        for constraint in constraints {
            let iri = constraint.iri();
            let values: Vec<&Term> = quads
                .iter()
                .filter(|q| &q.subject == entity && q.predicate.as_str() == iri)
                .map(|q| &q.object)
                .collect();
            let count = values.len() as u32;
            let report = |kind, severity| ViolationReport {
                entity: entity.clone(),
                constraint: constraint.clone(),
                observed_count: count,
                kind,
                severity,
            };
            if count < constraint.min_card {
                reports.push(report(ViolationKind::TooFewValues, Severity::Error));
            }
            if constraint.max_card.is_some_and(|max| count > max) {
                reports.push(report(ViolationKind::TooManyValues, Severity::Error));
            }
            if let Some(allowed) = &constraint.allowed_values {
                if values.iter().any(|v| !allowed.iter().any(|a| a == value_key(v))) {
                    reports.push(report(ViolationKind::DisallowedValue, Severity::Error));
                }
            }
            if let Some(severity) = values.iter().filter_map(|v| term_kind_issue(constraint, v)).min() {
                reports.push(report(ViolationKind::WrongTermKind, severity));
            }
        }
        Ok(reports)
    }

    /// The Service subclass whose allowed categories contain `category`, or
    /// `Service` itself.
    pub fn classify_service(&self, category: &str) -> &str {
        let wanted = category.trim();
        for class in self.subclasses("Service") {
            if class == "Service" {
                continue;
            }
            let allowed = self.classes[class]
                .constraints
                .iter()
                .find(|c| c.property == "serviceCategory")
                .and_then(|c| c.allowed_values.as_ref());
            if allowed.is_some_and(|values| values.iter().any(|v| v.eq_ignore_ascii_case(wanted))) {
                return class;
            }
        }
        "Service"
    }

    /// One line per class: name, macroclass, parent (or `-`) and its own
    /// constraints, tab-separated.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for class in self.classes.values() {
            let constraints: Vec<String> = class.constraints.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                class.name,
                class.macroclass,
                class.parent.as_deref().unwrap_or("-"),
                constraints.join(", ")
            ));
        }
        out
    }
}

/// The comparable value of a term: IRI local name or literal lexical form.
fn value_key(term: &Term) -> &str {
    match term {
        Term::Iri(iri) => vocab::local_name(iri.as_str()),
        Term::Literal(lit) => lit.lexical(),
    }
}

fn term_kind_issue(constraint: &PropertyConstraint, value: &Term) -> Option<Severity> {
    match (constraint.kind, value, &constraint.range) {
        (PropertyKind::Object, Term::Literal(_), _) => Some(Severity::Error),
        (PropertyKind::Data, Term::Iri(_), _) => Some(Severity::Error),
        (PropertyKind::Data, Term::Literal(lit), Range::Scalar(dt)) if lit.datatype() != *dt => {
            // An integer stored where a decimal is declared is still readable.
            if dt.accepts(lit.lexical()) {
                Some(Severity::Warning)
            } else {
                Some(Severity::Error)
            }
        }
        _ => None,
    }
}
