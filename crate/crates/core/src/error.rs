use thiserror::Error;

/// Errors raised across the simulation, sequence and optimization layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {max_asymmetry:.3e})")]
    NonHermitianInput { max_asymmetry: f64 },

    #[error("qubit index must be 1 or 2, got {0}")]
    BadQubitIndex(u8),

    #[error("state is not normalized (|psi|^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("gamma must be finite and >= 0, got {0}")]
    NegativeGamma(f64),

    #[error("gamma {gamma} outside the decomposition range [0, 1]")]
    GammaOutOfRange { gamma: f64 },

    #[error("no propagator period found below {bound} for gamma = {gamma}")]
    NoPeriodFound { gamma: f64, bound: f64 },

    #[error("angle expression evaluated to a non-finite value: {0}")]
    EvalError(String),

    #[error("term isolation supports only zz and xyz system Hamiltonians")]
    UnsupportedSystem,

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("singular normal equations after {iterations} iterations (best rms {rms:.3e})")]
    SingularJacobian {
        iterations: usize,
        best: Vec<f64>,
        rms: f64,
    },

    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("reference value {value:.3e} at index {index} is too small for a relative deviation")]
    DegenerateReference { index: usize, value: f64 },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o: {0}")]
    Io(String),
}

/// Text-format parse failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
