use super::{CatalogNumber, CatalogRoad, TargetService, ToponymCatalog};
use crate::address::{municipality_key, parse_civic, CivicColor, CivicNumber, QualifierTable, RawAddress};
use crate::ingestion::encode_segment;
use crate::quadstore::{GeoPoint, Iri, Literal, Quad, QuadStore, Term};
use crate::vocab;

fn term(local: &str) -> Iri {
    Iri::new(vocab::property_iri(local)).unwrap()
}

fn rdf_type() -> Iri {
    Iri::new(vocab::RDF_TYPE).unwrap()
}

pub fn municipality_iri_for(base: &str, name: &str) -> Iri {
    Iri::new(format!("{base}/municipality/{}", encode_segment(&municipality_key(name)))).unwrap()
}

fn civic_lexical(c: &CivicNumber) -> String {
    CivicNumber {
        color: CivicColor::None,
        ..c.clone()
    }
    .to_string()
}

/// Street-guide quads for catalog roads: Road, StreetNumber and Entry
/// entities plus the municipality each road lies in.
pub fn catalog_quads(roads: &[CatalogRoad], base: &str, ctx: &Iri) -> Vec<Quad> {
    let mut out = Vec::new();
    let q = |s: &Iri, p: &str, o: Term| Quad::new(s.clone(), term(p), o, ctx.clone());
    for road in roads {
        let town = municipality_iri_for(base, &road.municipality);
        out.push(Quad::new(town.clone(), rdf_type(), Iri::new(vocab::km4c("Municipality")).unwrap(), ctx.clone()));
        out.push(q(&town, "name", Literal::string(&road.municipality).into()));
        out.push(Quad::new(road.iri.clone(), rdf_type(), Iri::new(vocab::km4c("Road")).unwrap(), ctx.clone()));
        out.push(q(&road.iri, "roadName", Literal::string(&road.official_name).into()));
        if let Some(alt) = &road.alternative_name {
            out.push(q(&road.iri, "alternativeName", Literal::string(alt).into()));
        }
        out.push(q(&road.iri, "inMunicipalityOf", town.into()));
        for n in &road.street_numbers {
            out.push(q(&road.iri, "hasStreetNumber", n.iri.clone().into()));
            out.push(Quad::new(n.iri.clone(), rdf_type(), Iri::new(vocab::km4c("StreetNumber")).unwrap(), ctx.clone()));
            out.push(q(&n.iri, "belongToRoad", road.iri.clone().into()));
            out.push(q(&n.iri, "number", Literal::string(civic_lexical(&n.civic)).into()));
            if let Some(code) = n.civic.color.class_code() {
                out.push(q(&n.iri, "classCode", Literal::string(code).into()));
            }
            out.push(q(&n.iri, "hasExternalAccess", n.entry.clone().into()));
            out.push(Quad::new(n.entry.clone(), rdf_type(), Iri::new(vocab::km4c("Entry")).unwrap(), ctx.clone()));
        }
    }
    out.sort();
    out.dedup();
    out
}

fn literal(store: &QuadStore, s: &Iri, p: &str) -> Option<String> {
    store
        .matches(Some(s), Some(&term(p)), None, None)
        .into_iter()
        .find_map(|q| q.object.as_literal().map(|l| l.lexical().to_string()))
}

fn object(store: &QuadStore, s: &Iri, p: &str) -> Option<Iri> {
    store
        .matches(Some(s), Some(&term(p)), None, None)
        .into_iter()
        .find_map(|q| q.object.as_iri().cloned())
}

fn typed(store: &QuadStore, class: &str) -> Vec<Iri> {
    let mut out: Vec<Iri> = store
        .matches(None, Some(&rdf_type()), Some(&Term::from(Iri::new(vocab::km4c(class)).unwrap())), None)
        .into_iter()
        .map(|q| q.subject)
        .collect();
    out.sort();
    out.dedup();
    out
}

/// Rebuilds the toponym catalog from the Road entities in `store`.
/// Numbers without an external access are left out.
pub fn catalog_from_store(store: &QuadStore, table: QualifierTable) -> ToponymCatalog {
    let roads = typed(store, "Road")
        .into_iter()
        .filter_map(|iri| {
            let official_name = literal(store, &iri, "roadName")?;
            let municipality = object(store, &iri, "inMunicipalityOf")
                .and_then(|m| literal(store, &m, "name"))
                .unwrap_or_default();
            let mut street_numbers: Vec<CatalogNumber> = store
                .matches(Some(&iri), Some(&term("hasStreetNumber")), None, None)
                .into_iter()
                .filter_map(|q| {
                    let n = q.object.as_iri()?.clone();
                    let mut civic = parse_civic(&literal(store, &n, "number")?).into_iter().next()?;
                    civic.color = literal(store, &n, "classCode")
                        .map_or(CivicColor::None, |c| CivicColor::from_class_code(&c));
                    Some(CatalogNumber {
                        entry: object(store, &n, "hasExternalAccess")?,
                        iri: n,
                        civic,
                    })
                })
                .collect();
            street_numbers.dedup_by(|a, b| a.iri == b.iri);
            Some(CatalogRoad {
                alternative_name: literal(store, &iri, "alternativeName"),
                iri,
                municipality,
                official_name,
                street_numbers,
            })
        })
        .collect();
    ToponymCatalog::new(roads, table)
}

/// Service entities carrying the raw address of each target service.
pub fn service_quads(services: &[TargetService], ctx: &Iri) -> Vec<Quad> {
    let mut out = Vec::new();
    for s in services {
        let q = |p: &str, o: Term| Quad::new(s.iri.clone(), term(p), o, ctx.clone());
        out.push(Quad::new(s.iri.clone(), rdf_type(), Iri::new(vocab::km4c("Service")).unwrap(), ctx.clone()));
        out.push(q("streetAddress", Literal::string(&s.address.street_text).into()));
        if !s.address.civic_text.is_empty() {
            out.push(q("civicNumber", Literal::string(&s.address.civic_text).into()));
        }
        if !s.address.municipality.is_empty() {
            out.push(q("locality", Literal::string(&s.address.municipality).into()));
        }
        if let Some(p) = s.coordinates {
            out.push(q("lat", Literal::decimal(p.lat()).into()));
            out.push(q("long", Literal::decimal(p.long()).into()));
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Services typed km4c:Service (or a subclass listed in `classes`) that
/// carry a street address, ordered by IRI.
pub fn services_from_store(store: &QuadStore, classes: &[&str]) -> Vec<TargetService> {
    let mut iris: Vec<Iri> = classes.iter().flat_map(|c| typed(store, c)).collect();
    iris.sort();
    iris.dedup();
    iris.into_iter()
        .filter_map(|iri| {
            let street = literal(store, &iri, "streetAddress")?;
            let civic = literal(store, &iri, "civicNumber").unwrap_or_default();
            let town = literal(store, &iri, "locality").unwrap_or_default();
            Some(TargetService {
                coordinates: store.location(&iri),
                address: RawAddress::new(&street, &civic, &town),
                iri,
            })
        })
        .collect()
}

/// Tab-separated services: `iri street civic municipality [lat long]`.
pub fn parse_services_tsv(text: &str) -> Result<Vec<TargetService>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let err = |m: &str| format!("line {}: {m}", i + 1);
        if f.len() != 4 && f.len() != 6 {
            return Err(err("expected 4 or 6 tab-separated fields"));
        }
        let iri = Iri::new(f[0]).map_err(|e| err(&e.to_string()))?;
        let coordinates = if f.len() == 6 && !(f[4].is_empty() && f[5].is_empty()) {
            let lat = f[4].parse().map_err(|_| err("bad latitude"))?;
            let long = f[5].parse().map_err(|_| err("bad longitude"))?;
            Some(GeoPoint::new(lat, long).map_err(|e| err(&e.to_string()))?)
        } else {
            None
        };
        out.push(TargetService {
            iri,
            address: RawAddress::new(f[1], f[2], f[3]),
            coordinates,
        });
    }
    Ok(out)
}

pub fn services_tsv(services: &[TargetService]) -> String {
    let mut out = String::new();
    for s in services {
        let (lat, long) = s.coordinates.map_or((String::new(), String::new()), |p| (p.lat().to_string(), p.long().to_string()));
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{lat}\t{long}\n",
            s.iri, s.address.street_text, s.address.civic_text, s.address.municipality
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{generate_corpus, CorpusSpec};

    #[test]
    fn catalog_and_services_round_trip_through_store() {
        let corpus = generate_corpus(&CorpusSpec {
            n_services: 120,
            n_roads: 40,
            ..CorpusSpec::default()
        })
        .unwrap();
        let ctx = Iri::new("http://x/graph/streets").unwrap();
        let mut store = QuadStore::new();
        store.insert(&catalog_quads(&corpus.roads, "http://x", &ctx)).unwrap();
        store.insert(&service_quads(&corpus.services, &ctx)).unwrap();
        let back = catalog_from_store(&store, QualifierTable::seed());
        assert_eq!(back.roads(), corpus.catalog().roads());
        let mut expected = corpus.services.clone();
        expected.sort_by(|a, b| a.iri.cmp(&b.iri));
        assert_eq!(services_from_store(&store, &["Service"]), expected);
        assert_eq!(parse_services_tsv(&services_tsv(&corpus.services)).unwrap(), corpus.services);
    }

    #[test]
    fn bad_service_lines_are_located() {
        let err = parse_services_tsv("http://x/s\tVIA ROMA\t1\tFIRENZE\n\nnot an iri\tx\t1\ty\n").unwrap_err();
        assert!(err.starts_with("line 3"), "{err}");
        assert!(parse_services_tsv("http://x/s\tVIA ROMA\t1\n").is_err());
    }
}
