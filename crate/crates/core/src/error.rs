use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad embedding header: {0}")]
    Header(String),

    #[error("magic mismatch: expected \"EMBV1\", found {found:?}")]
    MagicMismatch { found: String },

    #[error("count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("non-finite value in row {row}")]
    NonFiniteValue { row: usize },

    #[error("labels line {line}: {reason}")]
    UnknownLabelColumn { line: usize, reason: String },

    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("point set is empty")]
    EmptySet,

    #[error("invalid point set: {0}")]
    InvalidPointSet(String),

    #[error("label {0} has no rows")]
    EmptyLabel(String),

    #[error("inconsistent label space: {0}")]
    InconsistentLabelSpace(String),

    #[error("series directory {0} contains no snapshots")]
    EmptySeries(PathBuf),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("nearest-point iteration did not converge after {iterations} iterations (distance {distance:.6e}, gap {gap:.3e})")]
    NoConvergence {
        iterations: usize,
        distance: f64,
        gap: f64,
    },

    #[error("point sets are not separable (hull distance {distance:.3e})")]
    NotSeparable { distance: f64 },

    #[error("{}", overlap_message(pairs))]
    IrreducibleOverlap { pairs: Vec<OverlapPair> },

    #[error("representation is not linear: {clusters} clusters for {labels} labels")]
    NotLinear { clusters: usize, labels: usize },

    #[error("distance vectors have different pair orders")]
    PairOrderMismatch,

    #[error("distance vector has zero variance")]
    ZeroVariance,

    #[error("label spaces differ: {0}")]
    LabelSpaceMismatch(String),

    #[error("at least two labels are required, found {0}")]
    TooFewLabels(usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("training data has a single class")]
    SingleClass,

    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("serialization error: {0}")]
    Serialization(String),
}

/// A pair of rows with different labels lying within epsilon of each other.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OverlapPair {
    pub row_a: usize,
    pub row_b: usize,
    pub label_a: String,
    pub label_b: String,
    pub distance: f64,
}

fn overlap_message(pairs: &[OverlapPair]) -> String {
    let mut msg = format!("{} cross-label point pairs lie within epsilon", pairs.len());
    if let Some(p) = pairs.first() {
        msg += &format!(
            "; first: row {} ({}) and row {} ({}) at distance {:.3e}",
            p.row_a, p.label_a, p.row_b, p.label_b, p.distance
        );
    }
    msg
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
