//! Namespaces and well-known IRIs shared across the toolkit.

pub const KM4C: &str = "http://www.disit.org/km4city/schema#";
pub const GEO: &str = "http://www.w3.org/2003/01/geo/wgs84_pos#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";
pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

pub const GEO_LAT: &str = "http://www.w3.org/2003/01/geo/wgs84_pos#lat";
pub const GEO_LONG: &str = "http://www.w3.org/2003/01/geo/wgs84_pos#long";

/// Default base for IRIs minted by the pipeline.
pub const DEFAULT_BASE: &str = "http://km4city.local/resource";

/// Full IRI of a km4City class or property given its local name.
pub fn km4c(local: &str) -> String {
    format!("{KM4C}{local}")
}

/// IRI of a schema property. `lat` and `long` live in the WGS84 vocabulary,
/// everything else in the km4City namespace.
pub fn property_iri(local: &str) -> String {
    match local {
        "lat" | "long" => format!("{GEO}{local}"),
        _ => km4c(local),
    }
}

/// Strips a known namespace, returning the local name.
pub fn local_name(iri: &str) -> &str {
    for ns in [KM4C, GEO, XSD] {
        if let Some(rest) = iri.strip_prefix(ns) {
            return rest;
        }
    }
    iri.rsplit(['#', '/']).next().unwrap_or(iri)
}
