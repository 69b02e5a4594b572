use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid multi-index: {0}")]
    InvalidIndex(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("J = {0} is not of the form 2^(L+1) - 1")]
    NotDyadic(u64),
    #[error("anisotropy mismatch on axis {axis}: beta ratio {beta_ratio}, delta ratio {delta_ratio}")]
    AnisotropyMismatch {
        axis: usize,
        beta_ratio: f64,
        delta_ratio: f64,
    },
    #[error("schedule has no budget allocation")]
    Unallocated,
    #[error("block of size {size} exceeds the limit {limit}")]
    BlockTooLarge { size: usize, limit: usize },
    #[error("basis value {value} exceeds the bound {bound}")]
    PhiOutOfRange { value: f64, bound: f64 },
    #[error("empty dataset")]
    EmptyDataset,
    #[error("schedule mismatch: {0}")]
    ScheduleMismatch(String),
    #[error("support mismatch: {0}")]
    SupportMismatch(String),
    #[error("missing estimate for J = {0}")]
    MissingEstimate(u64),
    #[error("empty model collection (n * alpha^2 = {0} < 2)")]
    EmptyCollection(f64),
    #[error("quadrature did not converge on [{a}, {b}] (error estimate {err})")]
    QuadratureNonConvergence { a: f64, b: f64, err: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidIndex(_)
                | Error::InvalidParameter(_)
                | Error::NotDyadic(_)
                | Error::AnisotropyMismatch { .. }
                | Error::Unallocated
                | Error::BlockTooLarge { .. }
                | Error::EmptyCollection(_)
                | Error::Json(_)
                | Error::Csv(_)
                | Error::SupportMismatch(_)
                | Error::ScheduleMismatch(_)
                | Error::EmptyDataset
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
