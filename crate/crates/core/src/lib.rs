//! Extraction of spatio-temporal interaction quadruples from biography text
//! and polarization analysis of the resulting signed interaction networks.
//!
//! The crate is organised along the pipeline:
//!
//! * [`ingest`]: documents, segments, trajectory triples and candidate pairing
//! * [`dataset`]: labelled examples, splits and summaries
//! * [`encoder`]: entity-marker encoder with attention over repeated mentions
//! * [`fusion`]: frozen trajectory extractor, gating and cross-attention
//! * [`train`]: heads, losses, adaptive multi-task weighting, optimisation
//! * [`eval`]: metrics and ablation runs
//! * [`extract`]: batch extraction, time normalisation and interaction typing
//! * [`polarnet`]: signed networks, modularity, null models and statistics

pub mod dataset;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod extract;
pub mod fusion;
pub mod gradcheck;
pub mod ingest;
pub mod linalg;
mod par;
pub mod params;
pub mod polarnet;
pub mod train;

pub use error::{Error, Result};
