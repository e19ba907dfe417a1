//! Crate-wide error type.
//!
//! Variants are grouped by how the command-line front end maps them to exit
//! codes: configuration/role problems exit with 2, numerical failures with 3.
//! A residual value above its gate is not an `Error` at all; the reports carry
//! the numbers and the caller decides.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    // --- configuration / role errors (exit code 2) ---
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("grid too small: need at least {need} points per axis, got {got}")]
    GridTooSmall { need: usize, got: usize },
    #[error("axis mismatch: {0}")]
    AxisMismatch(String),
    #[error("grid intersects singular locus: {0}")]
    SingularLocus(String),
    #[error("role mismatch: {0}")]
    RoleMismatch(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("unknown parameter `{param}` for entry `{entry}`")]
    UnknownParameter { entry: String, param: String },
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("series order {0} not available (coefficients beyond order 3 are not defined)")]
    SeriesOrder(usize),
    #[error("mode ({alpha}, {beta}) does not satisfy the exponent constraint")]
    InvalidMode { alpha: String, beta: String },
    #[error("singular mode: {0}")]
    SingularMode(String),
    #[error("exponent {0} is not an integer; sign factor (-1)^alpha undefined")]
    NonIntegerExponent(String),
    #[error("singular denominator: {0}")]
    SingularDenominator(String),
    #[error("bad argument: {0}")]
    BadArgument(String),

    // --- numerical failures (exit code 3) ---
    #[error("field contains non-finite values ({0})")]
    NonFinite(String),
    #[error("residual gate failed for {equation}: max residual {max_residual:.3e} > tolerance {tolerance:.3e}")]
    ResidualGate {
        equation: String,
        max_residual: f64,
        tolerance: f64,
    },
    #[error("singular point in integration interval: {0}")]
    SingularPoint(String),
    #[error("finite-time blow-up detected: {0}")]
    Blowup(String),
    #[error("errors are not monotone under refinement; no order estimate")]
    NonMonotoneErrors,
    #[error("evolution unstable: {0}")]
    Instability(String),
    #[error("time step violates stability bound: {0}")]
    StepBound(String),
    #[error("jacobian degenerate on grid: {0}")]
    JacobianDegenerate(String),
    #[error("newton iteration failed: {0}")]
    NewtonFailed(String),
    #[error("target point outside image of source rectangle: {0}")]
    OutsideImage(String),
    #[error("perturbation below noise floor; nothing to fit")]
    NoiseFloor,
    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    // --- i/o (exit code 2) ---
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv parse error: {0}")]
    Csv(String),
}

impl Error {
    /// Exit code the CLI uses for this error: 2 for configuration and role
    /// problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            UnknownAxis(_) | GridTooSmall { .. } | AxisMismatch(_) | SingularLocus(_)
            | RoleMismatch(_) | UnknownEntry(_) | UnknownParameter { .. }
            | ConstraintViolated(_) | SeriesOrder(_) | InvalidMode { .. } | SingularMode(_)
            | NonIntegerExponent(_) | SingularDenominator(_) | BadArgument(_) | Io(_)
            | Csv(_) => 2,
            NonFinite(_) | ResidualGate { .. } | SingularPoint(_) | Blowup(_)
            | NonMonotoneErrors | Instability(_) | StepBound(_) | JacobianDegenerate(_)
            | NewtonFailed(_) | OutsideImage(_) | NoiseFloor | DegenerateRegression(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
