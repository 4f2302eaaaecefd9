use thiserror::Error;

/// Errors raised by the cost models, the statistic store, the pruning tests
/// and the segmentation driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coordinate {coord} = {value} lies outside the open interval ({lower}, {upper})")]
    Domain {
        coord: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("degenerate segment: {0}")]
    DegenerateSegment(String),

    #[error("quadratic forms with equal determinant growth are not supported")]
    TieBreakUnsupported,

    #[error("empty segment at index {0}")]
    EmptySegment(usize),

    #[error("index error: {0}")]
    Index(String),

    #[error("global cost Q_{0} has not been computed yet")]
    State(usize),

    #[error("constraint matrix is singular (condition number {0:e})")]
    SingularSystem(f64),

    #[error("corrupt last-change array at position {0}")]
    CorruptState(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("penalty {beta} exceeds the existence bound {bound}")]
    InfeasiblePenalty { beta: f64, bound: f64 },

    #[error("root solve failed at t = {t}: {detail}")]
    Solve { t: usize, detail: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no finite segmentation of the first {0} points")]
    Infeasible(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
