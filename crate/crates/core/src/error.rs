use thiserror::Error;

/// Errors raised by the analysis and completion routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("SVD of a {rows}x{cols} matrix did not converge after {iterations} QR sweeps")]
    SvdNonConvergence {
        rows: usize,
        cols: usize,
        iterations: usize,
    },

    #[error("matrix entries must be finite (found {value} at ({row}, {col}))")]
    NonFinite { row: usize, col: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("requested rank {requested} but the matrix has numerical rank {found}")]
    RankMismatch { requested: usize, found: usize },

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("invalid observation pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tangent projection is ill-posed at rank {rank}: observation map is not injective on the tangent space")]
    IllPosed { rank: usize },

    #[error("singular pivot block (condition number {condition:.3e}) for entry ({row}, {col})")]
    SingularMinor { row: usize, col: usize, condition: f64 },

    #[error("observation pattern is reducible into {components} components; rank-one completion is not unique")]
    Reducible { components: usize },

    #[error("observed entry ({row}, {col}) is zero; rank-one propagation requires nonzero observations")]
    ZeroObservation { row: usize, col: usize },

    #[error("no exact rank-one completion: entry ({row}, {col}) observed {observed} but propagated {propagated}")]
    Inconsistent {
        row: usize,
        col: usize,
        observed: f64,
        propagated: f64,
    },

    #[error("row or column never observed: {0}")]
    Unobserved(String),

    #[error("pattern is not a subset of the larger pattern: entry ({row}, {col}) missing")]
    NotSubset { row: usize, col: usize },

    #[error("no well-posed pattern found after {attempts} draws")]
    SamplingExhausted { attempts: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SvdNonConvergence { .. }
                | Error::RankMismatch { .. }
                | Error::RankDeficient(_)
                | Error::IllPosed { .. }
                | Error::SingularMinor { .. }
                | Error::Reducible { .. }
                | Error::Inconsistent { .. }
                | Error::SamplingExhausted { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
