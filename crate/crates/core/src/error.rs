use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows} rows, row {row} has {cols} entries")]
    NotSquare {
        rows: usize,
        row: usize,
        cols: usize,
    },

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max |M - M^dag| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("density matrix trace {trace} is not 1")]
    BadTrace { trace: f64 },

    #[error("dimension {0} is not a power of two")]
    DimNotPowerOfTwo(usize),

    #[error("invalid qubit permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Pauli parameters are not normalized (sum of squares = {sum_sq})")]
    NotNormalized { sum_sq: f64 },

    #[error("Pauli parameters {a:?} violate the {family} family constraint")]
    FamilyConstraint { family: &'static str, a: [f64; 4] },

    #[error("Kraus operators violate completeness (max deviation {deviation:e})")]
    Incomplete { deviation: f64 },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("unsupported qubit count {0}")]
    UnsupportedQubitCount(usize),

    #[error("expected a {expected}-qubit state, got {found} qubits")]
    WrongDimension { expected: usize, found: usize },

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("invalid channel assignment: {0}")]
    InvalidAssignment(String),

    #[error("expected {expected} channels, got {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error(
        "generator pair ({m}, {n}): discarded eigenvalue {eigenvalue:e} exceeds the leak threshold"
    )]
    SpectralLeak { m: usize, n: usize, eigenvalue: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for errors that signal a violated numerical assumption rather
    /// than bad input.
    pub fn is_assertion(&self) -> bool {
        matches!(self, Error::SpectralLeak { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
