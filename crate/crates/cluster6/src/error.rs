use thiserror::Error;

/// Errors produced by the cluster6 library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("qubit index {index} out of range 1..={n}")]
    QubitIndex { index: usize, n: usize },

    #[error("qubit count {requested} exceeds the cap of {cap}")]
    CapExceeded { requested: usize, cap: usize },

    #[error("invalid frame on qubit {qubit}: {reason}")]
    InvalidFrame { qubit: usize, reason: String },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("generators {0} and {1} do not commute")]
    NonCommutingGenerators(usize, usize),

    #[error("generators are not independent: subset {0} multiplies to the identity")]
    DependentGenerators(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}:{line}: {msg}")]
    TableParse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("duplicate subset key {key} (line {line})")]
    DuplicateSubset { key: String, line: usize },

    #[error("table is missing {} subset(s): {}", .0.len(), .0.join(", "))]
    IncompleteTable(Vec<String>),

    #[error("subset {0} not present in the table")]
    MissingSubset(String),

    #[error("no setting in the count table is compatible with target {0}")]
    NoCompatibleSetting(String),

    #[error("no single-side stabilizer predicts observable {0} on qubit {1}")]
    NoPredictor(String, usize),

    #[error("expression has {0} distinct observables, above the enumeration cap of {1}")]
    EnumerationCap(usize, usize),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("observable is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("noise parameter {name}={value} outside [{lo}, {hi}]")]
    NoiseRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("correlation {0} outside [-1, 1]")]
    CorrelationRange(f64),

    #[error("measurement setting error: {0}")]
    Setting(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
