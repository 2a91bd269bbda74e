use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong between reading a frame and issuing a prediction.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed XYZM header: {0}")]
    Format(String),
    #[error("truncated frame: expected {expected} data lines, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("window rows {row_start}..={row_end}, cols {col_start}..={col_end} outside {width}x{height} frame")]
    WindowRange {
        row_start: usize,
        row_end: usize,
        col_start: usize,
        col_end: usize,
        width: usize,
        height: usize,
    },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("degenerate pair: |u_A + u_B + 2m| = {denominator:e} below guard")]
    DegeneratePair { denominator: f64 },
    #[error("no real datum for pair (discriminant {discriminant})")]
    NoRealDatum { discriminant: f64 },
    #[error("pair datum not fitted: {0}")]
    DatumDropped(String),
    #[error("datum unavailable for dimension {dimension}: no retained pairs")]
    DatumUnavailable { dimension: usize },
    #[error("objective rank unavailable for dimension {dimension}: every pair degenerate")]
    RankUnavailable { dimension: usize },
    #[error("frames are not aligned: {0}")]
    Alignment(String),
    #[error("root solve failed: {0}")]
    RootSolve(String),
    #[error("mixity unavailable: no candidate phi produced finite curvature")]
    MixityUnavailable,
    #[error("zoom-out unavailable: {0}")]
    ZoomOutUnavailable(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("insufficient frames: need at least {needed}, found {found}")]
    InsufficientFrames { needed: usize, found: usize },
    #[error("prediction at frame {predicted} comes after the failure at frame {actual}")]
    LatePrediction { predicted: u64, actual: u64 },
    #[error("run identifiers differ: report `{report}` vs manifest `{manifest}`")]
    RunMismatch { report: String, manifest: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
