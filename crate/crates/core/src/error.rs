use thiserror::Error;

/// Unified error type for the whole library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {qubit_count} qubits")]
    QubitIndex { index: usize, qubit_count: usize },

    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    DegenerateGate(usize),

    #[error("qubit count {0} exceeds the {max} supported", max = crate::qcore::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("theta = {0} rad lies on the boundary of (0, pi): beta*omega is infinite")]
    InfiniteBeta(f64),

    #[error("probability vector sums to {0}, expected 1")]
    NotNormalized(f64),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("empty qubit subset")]
    EmptySubset,

    #[error("unknown qubit label '{0}'")]
    UnknownLabel(String),

    #[error("matrix is not column-stochastic (column {column} sums to {sum})")]
    NotStochastic { column: usize, sum: f64 },

    #[error("readout error rate {0} outside [0, 0.5)")]
    ErrorRate(f64),

    #[error("matrix is singular or too ill-conditioned to invert")]
    Singular,

    #[error("compensated populations have negative entries beyond tolerance: {0:?}")]
    NegativeProbability(Vec<f64>),

    #[error("need one calibration record per basis state: got {got}, expected {expected}")]
    MissingBasisState { got: usize, expected: usize },

    #[error("shot count must be positive")]
    ZeroShots,

    #[error("scale-up size {0} outside 1..=5")]
    ScaleOutOfRange(usize),

    #[error("correction angle count {got} does not match slot count {expected}")]
    SlotCount { got: usize, expected: usize },

    #[error("need at least two samples for a confidence interval, got {0}")]
    TooFewSamples(usize),

    #[error("the deformed observable is not passive for the initial ensemble")]
    NotPassive,

    #[error("partition must cover qubit {0} exactly once")]
    PartitionCoverage(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
