//! Lifelog review toolkit.
//!
//! Turns wearable exports (1 Hz heart rate, interval camera frames, GPS
//! fixes) into two review products: heart-rate driven "special moment"
//! episodes and a visit-frequency heat map whose spots recall the frames
//! captured there. Both are packaged into a self-contained review bundle.
//!
//! The stages are plain functions over owned record lists:
//!
//! * [`ingest`] parses device exports into UTC record streams.
//! * [`fusion`] windows heart rate and joins frames to windows and fixes.
//! * [`moments`] flags sudden heart-rate changes and builds episodes.
//! * [`heatmap`] projects, accumulates, colorizes and indexes spots.
//! * [`bundle`] writes and reads the review bundle manifest.
//! * [`pipeline`] wires the stages together with one parameter set.

pub mod bundle;
pub mod error;
pub mod fusion;
pub mod heatmap;
pub mod ingest;
pub mod moments;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};

/// UTC seconds since the Unix epoch.
pub type Epoch = i64;
