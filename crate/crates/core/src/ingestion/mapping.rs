use std::collections::{BTreeMap, BTreeSet};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};

use super::{IngestError, StagedRecord};
use crate::quadstore::{Datatype, Iri, Literal, Quad};
use crate::schema::{PropertyKind, Schema};
use crate::vocab;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClassBinding {
    pub role: String,
    pub class: String,
    pub key_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyBinding {
    pub role: String,
    pub property: String,
    pub column: String,
    pub datatype: Datatype,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LinkBinding {
    pub from_role: String,
    pub property: String,
    pub to_role: String,
}

/// How the columns of a staged record become instances and statements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MappingSpec {
    pub dataset_id: String,
    pub class_bindings: Vec<ClassBinding>,
    pub property_bindings: Vec<PropertyBinding>,
    pub link_bindings: Vec<LinkBinding>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Class,
    Prop,
    Link,
}

const SEGMENT: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.').remove(b'~');

/// Percent-encodes one IRI path segment.
pub fn encode_segment(value: &str) -> String {
    utf8_percent_encode(value, SEGMENT).to_string()
}

/// `{base}/{dataset}/{role}/{key values joined by '/'}`.
pub fn mint_iri(base: &str, dataset: &str, role: &str, keys: &[&str]) -> Iri {
    let mut s = format!("{base}/{}/{}", encode_segment(dataset), encode_segment(role));
    for k in keys {
        s.push('/');
        s.push_str(&encode_segment(k));
    }
    Iri::new(s).expect("encoded segments form a valid IRI")
}

impl MappingSpec {
    /// Parses the line-oriented format: a `CLASS`, `PROP` or `LINK` header
    /// line opens a section whose lines are tab-separated
    /// (`role class key1,key2`, `role property column datatype`,
    /// `fromRole property toRole`).
    pub fn parse(dataset_id: &str, text: &str) -> Result<Self, IngestError> {
        let mut spec = MappingSpec {
            dataset_id: dataset_id.to_string(),
            class_bindings: Vec::new(),
            property_bindings: Vec::new(),
            link_bindings: Vec::new(),
        };
        let mut section = None;
        for (idx, line) in text.lines().enumerate() {
            let err = |reason: String| IngestError::Mapping {
                line: Some(idx + 1),
                reason,
            };
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match trimmed {
                "CLASS" => section = Some(Section::Class),
                "PROP" => section = Some(Section::Prop),
                "LINK" => section = Some(Section::Link),
                _ => {
                    let cols: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
                    match (section, &cols[..]) {
                        (None, _) => return Err(err("binding before any CLASS/PROP/LINK header".into())),
                        (Some(Section::Class), [role, class, keys]) => spec.class_bindings.push(ClassBinding {
                            role: role.to_string(),
                            class: class.to_string(),
                            key_columns: keys.split(',').map(|k| k.trim().to_string()).filter(|k| !k.is_empty()).collect(),
                        }),
                        (Some(Section::Prop), [role, property, column, datatype]) => {
                            spec.property_bindings.push(PropertyBinding {
                                role: role.to_string(),
                                property: property.to_string(),
                                column: column.to_string(),
                                datatype: Datatype::from_local_name(datatype)
                                    .ok_or_else(|| err(format!("unknown datatype {datatype:?}")))?,
                            })
                        }
                        (Some(Section::Link), [from, property, to]) => spec.link_bindings.push(LinkBinding {
                            from_role: from.to_string(),
                            property: property.to_string(),
                            to_role: to.to_string(),
                        }),
                        (Some(s), cols) => {
                            return Err(err(format!("{s:?} binding with {} columns", cols.len())));
                        }
                    }
                }
            }
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("CLASS\n");
        for c in &self.class_bindings {
            out.push_str(&format!("{}\t{}\t{}\n", c.role, c.class, c.key_columns.join(",")));
        }
        out.push_str("PROP\n");
        for p in &self.property_bindings {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", p.role, p.property, p.column, p.datatype.local_name()));
        }
        out.push_str("LINK\n");
        for l in &self.link_bindings {
            out.push_str(&format!("{}\t{}\t{}\n", l.from_role, l.property, l.to_role));
        }
        out
    }

    /// Checks roles, classes and properties against `schema`.
    pub fn validate(&self, schema: &Schema) -> Result<(), IngestError> {
        let err = |reason: String| IngestError::Mapping { line: None, reason };
        let mut roles = BTreeSet::new();
        for c in &self.class_bindings {
            if schema.class(&c.class).is_none() {
                return Err(err(format!("unknown class {:?}", c.class)));
            }
            if c.key_columns.is_empty() {
                return Err(err(format!("role {:?} has no key columns", c.role)));
            }
            if !roles.insert(c.role.as_str()) {
                return Err(err(format!("role {:?} declared twice", c.role)));
            }
        }
        let check = |role: &str, property: &str, kind: PropertyKind| -> Result<(), IngestError> {
            if !roles.contains(role) {
                return Err(err(format!("undeclared role {role:?}")));
            }
            match schema.property(property) {
                None => Err(err(format!("unknown property {property:?}"))),
                Some((k, _)) if k != kind => Err(err(format!("{property:?} is not a {kind:?} property"))),
                Some(_) => Ok(()),
            }
        };
        for p in &self.property_bindings {
            check(&p.role, &p.property, PropertyKind::Data)?;
        }
        for l in &self.link_bindings {
            check(&l.from_role, &l.property, PropertyKind::Object)?;
            if !roles.contains(l.to_role.as_str()) {
                return Err(err(format!("undeclared role {:?}", l.to_role)));
            }
        }
        Ok(())
    }

    /// Key columns of every role, in declaration order, without repeats.
    pub fn record_key_columns(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        self.class_bindings
            .iter()
            .flat_map(|c| c.key_columns.iter().map(String::as_str))
            .filter(|k| seen.insert(*k))
            .collect()
    }
}

/// Mints the role instances of `record` and emits its statements in `ctx`.
pub fn map_to_quads(record: &StagedRecord, mapping: &MappingSpec, base: &str, ctx: &Iri) -> Result<Vec<Quad>, IngestError> {
    let fields = &record.clean_fields;
    let value = |col: &str| fields.get(col).map(|v| v.trim()).filter(|v| !v.is_empty());
    let mut instances: BTreeMap<&str, Iri> = BTreeMap::new();
    let mut quads = Vec::new();
    let rdf_type = Iri::new(vocab::RDF_TYPE).unwrap();
    for c in &mapping.class_bindings {
        let keys = c
            .key_columns
            .iter()
            .map(|k| {
                value(k).ok_or_else(|| IngestError::MissingKey {
                    record_key: record.record_key.clone(),
                    role: c.role.clone(),
                    column: k.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let iri = mint_iri(base, &mapping.dataset_id, &c.role, &keys);
        quads.push(Quad::new(iri.clone(), rdf_type.clone(), Iri::new(vocab::km4c(&c.class)).unwrap(), ctx.clone()));
        instances.insert(&c.role, iri);
    }
    for p in &mapping.property_bindings {
        let Some(v) = value(&p.column) else { continue };
        let lit = Literal::new(v, p.datatype).map_err(|_| IngestError::BadValue {
            record_key: record.record_key.clone(),
            column: p.column.clone(),
            value: v.to_string(),
            datatype: p.datatype,
        })?;
        quads.push(Quad::new(
            instances[p.role.as_str()].clone(),
            Iri::new(vocab::property_iri(&p.property)).unwrap(),
            lit,
            ctx.clone(),
        ));
    }
    for l in &mapping.link_bindings {
        quads.push(Quad::new(
            instances[l.from_role.as_str()].clone(),
            Iri::new(vocab::property_iri(&l.property)).unwrap(),
            instances[l.to_role.as_str()].clone(),
            ctx.clone(),
        ));
    }
    quads.sort();
    quads.dedup();
    Ok(quads)
}
