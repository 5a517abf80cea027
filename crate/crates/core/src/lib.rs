//! Temporal analysis of country co-authorship networks.

pub mod centrality;
pub mod chart;
pub mod community;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod paths;
pub mod pipeline;
pub mod structure;
pub mod synth;
pub mod timeseries;

pub use error::{Error, Result};
pub use graph::{CollabNetwork, Normalization, Slice};
