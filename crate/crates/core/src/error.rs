//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("point violates the manifold constraint (defect {defect:.3e})")]
    InvalidPoint { defect: f64 },

    #[error("vector is not tangent at its foot point (defect {defect:.3e})")]
    InvalidTangent { defect: f64 },

    #[error("tangent is footed at a different point (offset {offset:.3e})")]
    FootMismatch { offset: f64 },

    #[error("tangent norm {norm:.6} reaches the injectivity guard {guard:.6}")]
    OutOfInjectivityRadius { norm: f64, guard: f64 },

    #[error("points are antipodal (1 + <p,q> = {gap:.3e}); logarithm undefined")]
    AntipodalPoints { gap: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("sample spread too large for a well-posed mean (max distance {max_dist:.6})")]
    SpreadTooLarge { max_dist: f64 },

    #[error("integration re-projection correction {correction:.3e} exceeds the stability bound")]
    StepUnstable { correction: f64 },

    #[error("parameter {t} outside [0, {max}]")]
    ParameterOutOfRange { t: f64, max: f64 },

    #[error("need at least {needed} samples for {params} free parameters, got {got}")]
    InsufficientData { needed: usize, got: usize, params: usize },

    #[error("all samples identical; total variance is zero")]
    DegenerateData,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("sample times must increase strictly; violation at index {index}")]
    NonMonotoneTimes { index: usize },

    #[error("control point list has length {got}; a cubic spline stores 3L + 1 points")]
    InvalidControlCount { got: usize },

    #[error("join {join} breaks C1 continuity by {defect:.3e}")]
    C1Violation { join: usize, defect: f64 },

    #[error("{op} failed at component {index}: {source}")]
    Component {
        op: &'static str,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("malformed header at line {line}: {reason}")]
    MalformedHeader { line: usize, reason: String },

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("track has no wind data")]
    NoWindData,

    #[error("training set contains a single class")]
    SingleClassInput,

    #[error("class {class} has {count} members, fewer than {folds} folds")]
    ClassTooSmall {
        class: String,
        count: usize,
        folds: usize,
    },

    #[error("class {class} is empty in the true labels")]
    EmptyClass { class: String },
}

impl Error {
    /// Wraps an error that occurred while applying `op` to the `index`-th
    /// component of a product-space operation.
    pub fn at_component(self, op: &'static str, index: usize) -> Error {
        Error::Component {
            op,
            index,
            source: Box::new(self),
        }
    }
}
