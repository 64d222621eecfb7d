use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Every hypothesis assigns zero probability to the observed outcome.
    #[error("degenerate evidence: outcome has zero likelihood under every hypothesis")]
    DegenerateEvidence,

    #[error("schedule shape mismatch: {kind} strategy with {slices} slices expects {expected} ratios, got {actual}")]
    ShapeMismatch {
        kind: &'static str,
        slices: usize,
        expected: usize,
        actual: usize,
    },

    #[error("historical optimization limited to {cap} slices, got {slices}")]
    DimensionCap { slices: usize, cap: usize },

    #[error("malformed channel: {0}")]
    MalformedChannel(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("schedule file: {0}")]
    Schedule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
