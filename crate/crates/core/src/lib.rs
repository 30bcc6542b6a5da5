//! Domain-based social credibility analytics.
//!
//! The crate turns raw social-post datasets into per-user, per-domain,
//! per-month credibility features, ranks users inside each domain, and
//! trains classifiers that separate domain influencers from everyone else.
//!
//! Pipeline order: [`ingest`] → [`semantics`] → [`features`] → [`ranking`]
//! → [`learn`]. [`synth`] generates labeled datasets with a controllable
//! contrast between focused influencers and multi-domain duplicating
//! spammers; [`pipeline`] wires every phase to on-disk artifacts.

pub mod error;
pub mod features;
pub mod fixtures;
pub mod ingest;
pub mod learn;
pub mod numfmt;
pub mod pipeline;
pub mod plots;
pub mod ranking;
pub mod semantics;
pub mod synth;

pub use error::{Error, Result};
