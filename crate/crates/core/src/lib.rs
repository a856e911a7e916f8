//! Political-leaning estimation on retweet networks and audience profiling
//! of the media domains users share.
//!
//! The pipeline runs in stages: corpus ingest, user geolocation, retweet
//! network construction with backbone extraction, label spreading, media
//! domain profiling and report generation. Each stage is usable on its own.

pub mod corpus;
pub mod error;
pub mod geo;
pub mod graph;
pub mod leaning;
pub mod media;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
