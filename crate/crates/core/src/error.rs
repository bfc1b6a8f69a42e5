use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty surface")]
    EmptySurface,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate neighborhood")]
    DegenerateNeighborhood,
    #[error("no visible surface")]
    NoVisibleSurface,
    #[error("projection miss at stroke {stroke} point {point}")]
    ProjectionMiss { stroke: usize, point: usize },
    #[error("left surface at stroke {stroke} point {point}: snap distance {distance} mm exceeds {tolerance} mm")]
    LeftSurface { stroke: usize, point: usize, distance: f64, tolerance: f64 },
    #[error("requires disc segment: {0}")]
    RequiresDiscSegment(String),
    #[error("stroke exceeds chart at stroke {stroke} point {point}")]
    StrokeExceedsChart { stroke: usize, point: usize },
    #[error("anchor not on chart: distance {0} mm")]
    AnchorNotOnChart(f64),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
