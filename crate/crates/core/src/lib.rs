//! km4City semantic aggregation toolkit: schema, quad store, ingestion
//! pipeline, address normalisation, reconciliation and evaluation.

pub mod quadstore;
pub mod schema;
pub mod vocab;
pub mod address;
pub mod reconciler;
pub mod evaluator;
pub mod ingestion;
