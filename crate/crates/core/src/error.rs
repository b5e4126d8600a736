use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidSpec(String),

    #[error("cutoff M = {cutoff} cannot hold the coupling band of order {order}")]
    CutoffTooSmall { cutoff: usize, order: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is empty")]
    Empty,

    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("QR iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("no PT-breaking crossing found below ceiling {ceiling} (PT-symmetric up to ceiling)")]
    NoCrossing { ceiling: f64 },

    #[error("max |Im| is not monotone inside bracket [{lo}, {hi}]")]
    NonMonotone { lo: f64, hi: f64 },

    #[error("argument out of supported range: {0}")]
    Domain(String),

    #[error("grid is not symmetric about the required center: {0}")]
    AsymmetricGrid(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
