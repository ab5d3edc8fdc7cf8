use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("continued fraction for I_{x}({a}, {b}) did not converge in {iters} iterations")]
    Convergence {
        x: f64,
        a: f64,
        b: f64,
        iters: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("degenerate window [{t1}, {t2}]: {reason}")]
    DegenerateWindow { t1: f64, t2: f64, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("elliptical slice sampler exceeded {cap} bracket shrinks at iteration {iteration}")]
    ShrinkCap { cap: usize, iteration: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("complete or quasi-complete separation: |beta| exceeded {limit}")]
    Separation { limit: f64 },

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("rejection sampler exceeded {0} proposals")]
    RejectionCap(usize),

    #[error("fit at delta = {delta} failed: {source}")]
    Window {
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Coarse category used by front ends to pick an exit status.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Dimension { .. } => ErrorKind::Config,
            Error::Data(_) | Error::DegenerateWindow { .. } | Error::Io(_) | Error::Json(_) => {
                ErrorKind::Data
            }
            Error::Window { source, .. } => source.kind(),
            _ => ErrorKind::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}
