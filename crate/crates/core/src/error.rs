use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate interval: width {width:e} is below 1e-12")]
    DegenerateInterval { width: f64 },

    #[error("({xi}, {xnext}) lies outside the connector rectangle [{lo}, {hi}] x [0, {lo}]")]
    Range { xi: f64, xnext: f64, lo: f64, hi: f64 },

    #[error("connector construction check failed: {0}")]
    Construction(String),

    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("iterate diverged at step {iter}: max |x_j| = {max_abs:e}")]
    Divergence { iter: u64, max_abs: f64 },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("parameter mismatch: {0}")]
    Mismatch(String),

    #[error("required {steps} steps exceeds the step budget of {budget}")]
    Budget { steps: u64, budget: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
