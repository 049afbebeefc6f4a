use std::path::PathBuf;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: max |S_ij - S_ji| = {asymmetry:e}")]
    NonSymmetric { asymmetry: f64 },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("angle separation {theta_hat} infeasible for n={n}, d={d} after {rejects} consecutive rejections")]
    SeparationInfeasible {
        n: usize,
        d: usize,
        theta_hat: f64,
        rejects: usize,
    },
    #[error("samples {i} and {j} are co-aligned")]
    DegenerateAngles { i: usize, j: usize },
    #[error("gram matrix diagonal entry {index} is {value}, expected 1")]
    BadGram { index: usize, value: f64 },
    #[error("angle {0} outside the admissible range")]
    BadAngle(f64),
    #[error("radius {0} outside the admissible range")]
    BadR(f64),
    #[error("angle triple is not realizable by unit vectors")]
    InfeasibleTriple,
    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },
    #[error("data matrix is rank deficient")]
    RankDeficient,
    #[error("row-Gram decomposition needs n <= m (got n={n}, m={m})")]
    WideMatrixRequired { n: usize, m: usize },
    #[error("activation matrix is identically zero")]
    DegenerateMatrix,
    #[error("snapshot does not match the current weights")]
    StaleSnapshot,
    #[error("no activation snapshot for step {0}")]
    MissingSnapshot(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a short description of what was being attempted.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}
