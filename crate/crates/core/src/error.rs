use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the geometry, evaluation and shape pipelines.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition (non-positive depth, degenerate extents, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Geometry outside what an operation supports, e.g. a tilted box passed to the yaw-only 3D IoU.
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    /// Rays along +x whose signed crossing count through the mesh does not cancel.
    #[error("mesh is not watertight: {} rays with unbalanced crossings (first: {:?})", rays.len(), rays.first())]
    SignAmbiguity { rays: Vec<(usize, usize)> },

    #[error("grid does not straddle the iso level; no surface to extract")]
    EmptySurface,

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize, last: Vec<f64> },

    #[error("optimization diverged at iteration {iteration} (loss {loss})")]
    Divergence {
        iteration: usize,
        loss: f64,
        trace: Box<crate::loss::OptimTrace>,
    },

    #[error("placement failed after {0} attempts")]
    PlacementFailed(usize),

    #[error("no ground truth available for this class and difficulty")]
    NoGroundTruth,

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
