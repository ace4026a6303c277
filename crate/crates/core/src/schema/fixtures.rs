//! Generated conforming and violating entities, one negative per constraint.

use super::{PropertyConstraint, PropertyKind, Range, Schema, SchemaError};
use crate::quadstore::{Datatype, Iri, Literal, Quad, Term};
use crate::vocab;

fn sample_value(c: &PropertyConstraint, entity: &Iri, i: u32) -> Term {
    if let Some(values) = &c.allowed_values {
        let v = &values[i as usize % values.len()];
        return match c.kind {
            PropertyKind::Data => Term::Literal(Literal::string(v.clone())),
            PropertyKind::Object => Term::Iri(Iri::new(vocab::km4c(v)).unwrap()),
        };
    }
    match (&c.kind, &c.range) {
        (PropertyKind::Data, Range::Scalar(dt)) => Term::Literal(match dt {
            Datatype::String => Literal::string(format!("value {i}")),
            Datatype::Integer => Literal::integer(i as i64),
            Datatype::Decimal => Literal::decimal(43.0 + i as f64 / 100.0),
            Datatype::DateTime => Literal::new(format!("2015-03-01T10:00:{:02}.000+01:00", i % 60), Datatype::DateTime).unwrap(),
            Datatype::Boolean => Literal::boolean(i % 2 == 0),
        }),
        (PropertyKind::Data, _) => Term::Literal(Literal::string(format!("value {i}"))),
        (PropertyKind::Object, _) => {
            Term::Iri(Iri::new(format!("{entity}/{}/{i}", c.property)).unwrap())
        }
    }
}

fn values_for(c: &PropertyConstraint, entity: &Iri, ctx: &Iri, n: u32) -> Vec<Quad> {
    let p = Iri::new(c.iri()).unwrap();
    (0..n)
        .map(|i| Quad::new(entity.clone(), p.clone(), sample_value(c, entity, i), ctx.clone()))
        .collect()
}

fn type_quad(class: &str, entity: &Iri, ctx: &Iri) -> Quad {
    Quad::new(
        entity.clone(),
        Iri::new(vocab::RDF_TYPE).unwrap(),
        Iri::new(vocab::km4c(class)).unwrap(),
        ctx.clone(),
    )
}

/// An entity of `class` satisfying every effective constraint: each property
/// gets `max(min, 1)` values capped at its maximum.
pub fn positive_fixture(schema: &Schema, class: &str, entity: &Iri, ctx: &Iri) -> Result<Vec<Quad>, SchemaError> {
    let mut quads = vec![type_quad(class, entity, ctx)];
    for c in schema.effective_constraints(class)? {
        let n = c.min_card.max(1).min(c.max_card.unwrap_or(u32::MAX));
        quads.extend(values_for(c, entity, ctx, n));
    }
    Ok(quads)
}

/// The positive fixture altered so that exactly `constraint` is violated:
/// required values dropped, a bounded property overfilled, an allowed-value
/// set escaped, or, failing all of those, a term of the wrong kind.
pub fn negative_fixture(
    schema: &Schema,
    class: &str,
    constraint: &PropertyConstraint,
    entity: &Iri,
    ctx: &Iri,
) -> Result<Vec<Quad>, SchemaError> {
    let iri = constraint.iri();
    let mut quads: Vec<Quad> = positive_fixture(schema, class, entity, ctx)?
        .into_iter()
        .filter(|q| q.predicate.as_str() != iri)
        .collect();
    let p = Iri::new(&iri).unwrap();
    if constraint.min_card > 0 {
        return Ok(quads);
    }
    if let Some(max) = constraint.max_card {
        let mut overfilled = values_for(constraint, entity, ctx, max + 1);
        if constraint.allowed_values.as_ref().is_some_and(|v| v.len() < (max + 1) as usize) {
            // Not enough distinct allowed values to exceed the maximum.
            overfilled = (0..=max)
                .map(|i| Quad::new(entity.clone(), p.clone(), Literal::string(format!("extra {i}")), ctx.clone()))
                .collect();
        }
        quads.extend(overfilled);
        return Ok(quads);
    }
    let bad: Term = if constraint.allowed_values.is_some() {
        Literal::string("__not_allowed__").into()
    } else {
        match constraint.kind {
            PropertyKind::Object => Literal::string("not a resource").into(),
            PropertyKind::Data => Iri::new(format!("{entity}/not-a-literal")).unwrap().into(),
        }
    };
    quads.push(Quad::new(entity.clone(), p, bad, ctx.clone()));
    Ok(quads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::load_schema;

    #[test]
    fn every_constraint_has_a_flagged_negative() {
        let schema = load_schema();
        let ctx = Iri::new("http://x/ctx").unwrap();
        let mut checked = 0;
        for class in schema.classes() {
            let entity = Iri::new(format!("http://x/{}", class.name)).unwrap();
            let pos = positive_fixture(&schema, &class.name, &entity, &ctx).unwrap();
            assert_eq!(schema.validate_entity(&entity, &pos, &class.name).unwrap(), vec![], "{}", class.name);
            for c in schema.effective_constraints(&class.name).unwrap() {
                let neg = negative_fixture(&schema, &class.name, c, &entity, &ctx).unwrap();
                let reports = schema.validate_entity(&entity, &neg, &class.name).unwrap();
                assert!(!reports.is_empty(), "{} / {}", class.name, c.property);
                assert!(reports.iter().all(|r| r.constraint.property == c.property), "{} / {}", class.name, c.property);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }
}
