//! File formats, GitHub ingestion and the `wocp` command line on top of
//! [`wocp_core`].

pub mod anonymize;
pub mod cli;
pub mod formats;
pub mod fsio;
pub mod github;
pub mod ingest;
pub mod report;

pub use wocp_core as core;
