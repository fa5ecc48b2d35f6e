use thiserror::Error;

/// Errors raised by the solvers and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("multiplier is not finite at xi = {xi}")]
    NonFinite { xi: f64 },
    #[error("degenerate flattening: d_z rho = {value:.3e} at x = {x:.6}, z = {z:.6}")]
    Degenerate { x: f64, z: f64, value: f64 },
    #[error("linear solver stalled after {iterations} iterations, relative residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("numerical abort at t = {t}: {reason}")]
    NumericalAbort { t: f64, reason: String },
    #[error("need at least {needed} snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },
    #[error("frequency left the band at t = {t}: xi = {xi}")]
    BandExit { t: f64, xi: f64 },
    #[error("rays crossed inside a tube at t = {t}")]
    Caustic { t: f64 },
    #[error("iteration is not contracting: factor {factor:.3}")]
    NonContraction { factor: f64 },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
