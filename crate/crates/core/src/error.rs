use thiserror::Error;

/// Errors raised by the laboratory.
///
/// Solver outcomes such as blow-up are reported through
/// [`crate::solver::SolveStatus`], not through this type.
#[derive(Debug, Error)]
pub enum WaveError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coefficient bound violated: sup|h| = {sup} exceeds {limit}")]
    CoefficientBound { sup: f64, limit: f64 },

    #[error("level at t = {got} arrived after t = {last}")]
    Sequencing { last: f64, got: f64 },

    #[error("mollifier scale 1/{j} is below grid resolution dr = {dr}")]
    Resolution { j: u32, dr: f64 },

    #[error("cannot rescale a pair with zero norm")]
    CannotScale,

    #[error("iterate {k} left the admissible ball: sup|h| = {sup}")]
    Admissibility { k: usize, sup: f64 },

    #[error("iterate {k}: {source}")]
    Iteration {
        k: usize,
        #[source]
        source: Box<WaveError>,
    },

    #[error("segment {segment}: {source}")]
    Segment {
        segment: usize,
        #[source]
        source: Box<WaveError>,
    },

    #[error("fit undefined: only {0} blow-up points")]
    FitUndefined(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, WaveError>;

pub(crate) fn invalid(msg: impl Into<String>) -> WaveError {
    WaveError::InvalidArgument(msg.into())
}
