//! Pipeline, ingestion, reporting and simulation layer over `xtpanel`.

pub mod config;
pub mod descriptives;
pub mod error;
pub mod ingest;
pub mod montecarlo;
pub mod pipeline;
pub mod report;
pub mod sim;
