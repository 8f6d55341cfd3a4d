//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A requested dimension exceeds the dense-storage capacity.
    #[error("capacity exceeded: dimension {dim} > maximum {max}")]
    Capacity { dim: usize, max: usize },

    /// Operand shapes are incompatible.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// A matrix required to be Hermitian is not, within tolerance.
    #[error("matrix is not Hermitian: relative residual {residual:.3e} exceeds {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    /// Input data failed a structural validation (NaN/Inf entries, empty
    /// vectors, zero states, bad grids, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// The clock state has (numerically) no overlap with the global state;
    /// the conditional formulas have the overlap in the denominator.
    #[error("singular clock overlap{}: N = {overlap:.3e} below threshold {threshold:.3e}", lambda.map(|l| format!(" at lambda = {l}")).unwrap_or_default())]
    SingularOverlap {
        lambda: Option<f64>,
        overlap: f64,
        threshold: f64,
    },

    /// An expectation curve is not strictly monotone, so it cannot serve as a
    /// clock readout on the requested interval.
    #[error("readout unusable: expectation curve is not strictly monotone on the grid")]
    NonMonotoneReadout,

    /// A value to be inverted lies outside the range of the readout curve.
    #[error("readout value {value} outside curve range [{lo}, {hi}]")]
    ReadoutOutOfRange { value: f64, lo: f64, hi: f64 },

    /// Two trajectories (or a trajectory and a sample set) do not share a grid.
    #[error("grid mismatch: {context}")]
    GridMismatch { context: String },

    /// A solvable export failed its own verification stamp.
    #[error("export verification failed: TDSE residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    ExportUnverified { residual: f64, threshold: f64 },

    /// The configuration document could not be parsed at all.
    #[error("config parse error: {0}")]
    ConfigParse(String),

    /// The configuration document parsed but is semantically invalid.
    #[error("config validation error: {0}")]
    ConfigInvalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach the grid parameter to a singular-overlap error raised by a
    /// lower-level operation that did not know it.
    pub fn with_lambda(self, l: f64) -> Self {
        match self {
            Error::SingularOverlap {
                overlap, threshold, ..
            } => Error::SingularOverlap {
                lambda: Some(l),
                overlap,
                threshold,
            },
            other => other,
        }
    }
}
