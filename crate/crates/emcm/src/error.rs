//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, evaluation and fitting.
#[derive(Debug, Error)]
pub enum Error {
    /// A quantity that must be strictly positive was not.
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },

    /// Band edges given in the wrong order.
    #[error("reversed band: f1 = {f1} Hz must be below f2 = {f2} Hz")]
    Reversed { f1: f64, f2: f64 },

    /// Evaluation frequency coincides with a pole of the series.
    #[error("wavenumber {k} hits the pole at k_n = {pole}")]
    PoleHit { k: f64, pole: f64 },

    /// The shifted resonator block is singular at the requested frequency.
    #[error("singular shift: {shift} is an eigenvalue of the resonator block")]
    SingularShift { shift: f64 },

    /// Impedance-to-scattering conversion hit a singular (Z/z_ref + I).
    #[error("impedance-to-scattering conversion is singular")]
    SingularConversion,

    /// No in-band terms available where at least one is required.
    #[error("no in-band terms: the coupling matrix needs at least one resonator")]
    EmptyInBand,

    /// A matrix that must be symmetric positive definite is not.
    #[error("matrix not positive definite: eigenvalue {eigenvalue} below floor")]
    NotPositiveDefinite { eigenvalue: f64 },

    /// A spectral inverse was requested outside its admissible range.
    #[error("eigenvalue {eigenvalue} out of range for the spectral inverse")]
    OutOfRange { eigenvalue: f64 },

    /// An out-of-band pole lies inside the analysis band.
    #[error("out-of-band pole at k = {k} lies inside the analysis band")]
    PoleInsideBand { k: f64 },

    /// A basis-change matrix failed the orthogonality check.
    #[error("matrix not orthogonal: max |QtQ - I| = {deviation}")]
    NotOrthogonal { deviation: f64 },

    /// Operands have incompatible dimensions.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    /// A term's coupling vector does not match the model's port count.
    #[error("term {term}: coupling vector has {found} entries, expected {expected}")]
    LengthMismatch {
        term: usize,
        expected: usize,
        found: usize,
    },

    /// Rank-1 projection of an all-zero residue matrix.
    #[error("cannot project a zero residue matrix")]
    ZeroResidue,

    /// Not enough samples for the requested fit order.
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    /// A fit starting point has nonzero entries outside the topology mask.
    #[error("mask violation: entry ({row}, {col}) is nonzero but not allowed")]
    MaskViolation { row: usize, col: usize },

    /// Catch-all for invalid arguments.
    #[error("{0}")]
    InvalidArgument(String),

    /// Malformed input document.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// File access failure, with the offending path.
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
