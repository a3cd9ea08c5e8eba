use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by prediction-set validation, transport solving, and the
/// estimators built on top of them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("prediction set must contain at least one row")]
    EmptyPredictions,

    #[error("need at least two classes, got {0}")]
    TooFewClasses(usize),

    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("non-finite score at row {row}, column {col}")]
    NonFiniteScore { row: usize, col: usize },

    #[error("row {row} is not a probability vector (sum {sum}, entries must lie in [0,1] and sum to 1 within 1e-6)")]
    NotAProbabilityRow { row: usize, sum: f64 },

    #[error("label {label} out of range for {k} classes at row {row}")]
    LabelOutOfRange { row: usize, label: usize, k: usize },

    #[error("expected {expected} labels, got {got}")]
    LabelCountMismatch { got: usize, expected: usize },

    #[error("{0} requires labels")]
    MissingLabels(&'static str),

    #[error("{0} requires probabilities, not logits")]
    ProbabilitiesRequired(&'static str),

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("temperature {0} cannot be applied to probabilities; temperature scaling needs logits")]
    TemperatureOnProbabilities(f64),

    #[error("fitting a temperature requires logits")]
    LogitsRequired,

    #[error("marginal is invalid: entries must be finite, non-negative, and sum to 1 within 1e-9 (sum {sum})")]
    InvalidMarginal { sum: f64 },

    #[error("cannot build a marginal from an empty label vector")]
    EmptyLabels,

    #[error("class dimension mismatch: {left} vs {right}")]
    ClassMismatch { left: usize, right: usize },

    #[error("prediction sets must have matching shape: {n_left}x{k_left} vs {n_right}x{k_right}")]
    ShapeMismatch {
        n_left: usize,
        k_left: usize,
        n_right: usize,
        k_right: usize,
    },

    #[error("class index {index} out of range for {k} classes")]
    ClassOutOfRange { index: usize, k: usize },

    #[error("demands sum to {got}, expected {expected}")]
    DemandMismatch { got: usize, expected: usize },

    #[error("threshold was fit with {fit:?}, applied as {applied:?}")]
    ThresholdMismatch { fit: &'static str, applied: &'static str },

    #[error("batch size must be at least 1")]
    EmptyBatch,

    #[error("bin count must be at least 1")]
    NoBins,

    #[error("dirichlet concentration must be positive, got {0}")]
    NonPositiveAlpha(f64),

    #[error("delta must lie in (0, 0.5], got {0}")]
    DeltaOutOfRange(f64),

    #[error("{name} must lie in {range}, got {got}")]
    ParameterOutOfRange {
        name: &'static str,
        range: &'static str,
        got: f64,
    },

    #[error("class {0} has positive target mass but no labeled source rows")]
    UnsampleableClass(usize),

    #[error("numerical failure: {0}")]
    Numeric(&'static str),
}
