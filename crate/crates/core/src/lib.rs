//! Data-driven prognosis of incipient instability in sequences of point-grid
//! frames.
//!
//! Each analysed frame pair runs through pairwise normalisation, Borda and
//! objective ranks, dimensionless length-scale roots and composite curvature,
//! then a zoom-out pyramid that yields residual curvature and critical chain
//! lengths. [`engine::Engine`] folds those results into a trigger history and
//! issues a single failure prediction once both a chain and an energy trigger
//! have followed the onset of path dependency.
//!
//! The `examples/` directory walks through each stage:
//!
//! - `parse_window`: read an XYZM frame and cut an observation window
//! - `ranks`: Borda counts, objective ranks and the datum fit
//! - `roots`: length-scale roots and mixity selection
//! - `curvature`: composite curvature and path-dependency categories
//! - `zoom_out`: aggregation pyramid, residual curvature, critical chain length
//! - `trigger_replay`: the trigger state machine on a hand-written history
//! - `synthetic_burst`: generate bursting and control sequences and score them
//! - `analyze_dir`: run the engine over a frame directory and write reports

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod analysis;
pub mod curvature;
pub mod engine;
mod error;
pub mod frame;
pub mod kv;
pub mod lengthscale;
pub mod normalize;
pub mod prognosis;
pub mod rank;
pub mod synth;

pub use analysis::{analyze_pair, AnalysisConfig, PairAnalysis};
pub use engine::{run_analyze, run_score, Engine, EngineConfig, Outcome};
pub use error::{Error, Result};
pub use frame::{Frame, FrameDir, WindowSpec};
pub use prognosis::PrognosisState;
pub use synth::{BalloonScenario, Manifest, WeakSpot};
