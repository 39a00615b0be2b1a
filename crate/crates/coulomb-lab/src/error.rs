use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("array length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("data support [{lo}, {hi}] does not fit the grid (r_max = {rmax})")]
    SupportOutsideGrid { lo: f64, hi: f64, rmax: f64 },
    #[error("configuration invariant violated: {0}")]
    InvariantViolation(String),
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },
    #[error("evolution became non-finite at t = {t} (step {step}); check the CFL condition")]
    Unstable { t: f64, step: usize },
    #[error("amplitude grew by factor {factor:.3e} at t = {t}; aborting (instability cap)")]
    AmplitudeCap { t: f64, factor: f64 },
    #[error("operation requires d = 3, got d = {0}")]
    DimensionNot3(u32),
    #[error("requested point ({r}, {t}) is outside the stored trajectory window")]
    OutsideWindow { r: f64, t: f64 },
    #[error("fit aborted: {0}")]
    FitAborted(String),
    #[error("exponent out of range: {0}")]
    ExponentRange(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
