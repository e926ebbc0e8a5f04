use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("rank-deficient frame (Gram determinant {gram_det:.3e}); re-seed required")]
    RankDeficient { gram_det: f64 },

    #[error("negative time {0} where t >= 0 is required")]
    NegativeTime(f64),

    #[error("time {t} is not covered: {reason}")]
    OffGrid { t: f64, reason: String },

    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("ambiguous eigenpath matching at t = {t} (margin {margin:.3e})")]
    AmbiguousMatching { t: f64, margin: f64 },

    #[error("eigenvalue {value:.3e} below zero at t = {t}: channel is not completely positive")]
    NegativeEigenvalue { t: f64, value: f64 },

    #[error("Kraus reconstruction residual {residual:.3e} at t = {t}")]
    Reconstruction { t: f64, residual: f64 },

    #[error("column orthonormality residual {residual:.3e} at t = {t}")]
    ColumnOrthonormality { t: f64, residual: f64 },

    #[error("grid too coarse near t = {t}: cell propagator phase {phase:.3} exceeds pi/2")]
    GridTooCoarse { t: f64, phase: f64 },

    #[error("invalid decoupling set: {0}")]
    DecouplingSet(String),

    #[error("invalid decoupling cycle: {0}")]
    Cycle(String),

    #[error("pulse interval t/n = {interval} is not aligned with the grid")]
    Misaligned { interval: f64 },

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:.3e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("momentum window too small: tail mass {tail:.3e} exceeds budget {budget:.3e}")]
    Aliasing { tail: f64, budget: f64 },

    #[error("invalid function: {0}")]
    Function(String),

    #[error("invalid channel family: {0}")]
    Family(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
