use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline or the benchmark harness.
#[derive(Debug, Error)]
pub enum DoaError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("duplicate spatial frequency {0} rad in manifold")]
    DuplicateFrequency(f64),

    #[error("power vector is empty")]
    EmptyPowers,

    #[error("array size M={m} and RF chain count N_RF={n_rf} must share parity")]
    ParityMismatch { m: usize, n_rf: usize },

    #[error("invalid subarray mask: {0}")]
    InvalidMask(String),

    #[error("baseband combiner system is singular (condition number {cond:.3e}); dependent analog columns {columns:?}")]
    SingularCombiner { columns: Vec<usize>, cond: f64 },

    #[error("invalid beam set: {0}")]
    InvalidBeamSet(String),

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("shift-invariance system is rank deficient (sigma_min/sigma_max = {ratio:.3e})")]
    RankDeficient { ratio: f64 },

    #[error("source count d={d} requires more than {rows} rows")]
    TooManySources { d: usize, rows: usize },

    #[error("insufficient shift-invariant pairs: {pairs} available, {d} required")]
    InsufficientPairs { pairs: usize, d: usize },

    #[error("{solver} did not converge after {iterations} iterations (kkt gap {gap:.3e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        gap: f64,
        best: Vec<f64>,
    },

    #[error("every candidate window in sector {sector} has a singular Gram matrix")]
    AllWindowsSingular { sector: usize },

    #[error("Fisher information matrix is singular")]
    SingularFim,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = DoaError> = std::result::Result<T, E>;
