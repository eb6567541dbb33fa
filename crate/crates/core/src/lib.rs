//! Streaming anomaly detection for timestamped edge streams.
//!
//! Every edge record `(source, destination, timestamp)` is scored online by
//! combining a burst measure (is this edge type suddenly more frequent than
//! its history?) with two pattern-change measures (did the length of its
//! consecutive-occurrence runs or of its absence gaps shift?). All state
//! lives in a fixed set of count-min sketches, so memory is constant in the
//! number of edge types.
//!
//! The crate is generic over the cell/score scalar via [`Real`]; the type
//! aliases at the crate root pin the common `f64` and `f32` instantiations.

pub mod detector;
pub mod en;
pub mod eval;
pub mod guarantee;
pub mod ingest;
pub mod key;
pub mod num;
pub mod reference;
pub mod sketch;

pub use detector::{combine, gtest_score, ComponentScores, DetectorState, EdgeRecord, Params};
pub use en::EnDetector;
pub use eval::LabeledScores;
pub use guarantee::GuaranteeConfig;
pub use ingest::{StreamSource, SynthSpec};
pub use num::Real;
pub use sketch::{CellPos, CountSketch, FlagSketch, IndexVector, SketchLayout};

/// Edge-only detector over `f64` cells — the default instantiation.
pub type EoDetector = DetectorState<f64>;
/// Edge-only detector over `f32` cells.
pub type EoDetector32 = DetectorState<f32>;
/// Edge-node detector over `f64` cells.
pub type EnDetector64 = EnDetector<f64>;
/// Edge-node detector over `f32` cells.
pub type EnDetector32 = EnDetector<f32>;
/// Score weights and scale factor over `f64`.
pub type Params64 = Params<f64>;
