use thiserror::Error;

use crate::queueing::QueueLayer;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("channel of slice {slice} towards service {service} is singular (condition {condition:.3e})")]
    SingularChannel {
        slice: usize,
        service: usize,
        condition: f64,
    },

    #[error("unstable {layer} queue{}", slice.map(|s| format!(" in slice {s}")).unwrap_or_default())]
    UnstableQueue {
        layer: QueueLayer,
        slice: Option<usize>,
    },

    #[error("delay budget of slice {slice} is exhausted by the VNF layers (gap {gap:.3e} s)")]
    InfeasibleDelay { slice: usize, gap: f64 },

    #[error("degenerate power coefficient for UE {ue} of service {service}")]
    DegenerateCoefficient { service: usize, ue: usize },

    #[error("no feasible mapping; uncovered services: {uncovered:?}")]
    Infeasible { uncovered: Vec<usize> },

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("unknown expression `{0}`")]
    UnknownExpression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
