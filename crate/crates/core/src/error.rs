//! Error types shared across the crate.

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GraphError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge between {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("vertex id {id} out of range (n = {n})")]
    VertexOutOfRange { id: usize, n: usize },
    #[error("ball would exceed the vertex cap ({cap})")]
    BallTooLarge { cap: usize },
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum OperatorError {
    #[error("edge weight is zero on undirected edge {0}")]
    ZeroEdgeWeight(usize),
    #[error("operator entry m_e = 0 on directed edge {0}; delete the edge first")]
    ZeroOffDiagonal(usize),
    #[error("operator is not symmetric: m[{e}] != m[{inv}]")]
    NotSymmetric { e: usize, inv: usize },
    #[error("coefficient vector has wrong length (got {got}, want {want})")]
    BadLength { got: usize, want: usize },
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum NumericsError {
    #[error("eigenvalue iteration failed to converge")]
    NonConvergence,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has a non-finite entry at ({0}, {1})")]
    NonFiniteEntry(usize, usize),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("minimum degree {0} < 2; non-backtracking operations need d_min >= 2")]
    DegreeTooLow(usize),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RatioError {
    #[error("condition (a) does not apply to the zero-class edge {0}")]
    ZeroClassEdge(usize),
    #[error("structural violation: edge {e} (non-zero class) has infinite successor {f}")]
    InfiniteSuccessor { e: usize, f: usize },
    #[error("structural violation: vertex {0} has more than one infinite out-edge")]
    MultipleInfinite(usize),
    #[error("structural violation: zero edge {0} has no infinite follower")]
    ZeroWithoutInfinite(usize),
    #[error("malformed path: edge {next} does not follow edge {prev}")]
    MalformedPath { prev: usize, next: usize },
    #[error("path ratio undefined: infinite edge {f} preceded by finite non-zero edge {e}")]
    UndefinedProduct { e: usize, f: usize },
    #[error("assignment length {got} does not match 2m = {want}")]
    BadLength { got: usize, want: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GreenError {
    #[error("anchor (Mf_u)(u) = {modulus:.3e} vanishes below tol; cannot build the Green column")]
    AnchorZero { modulus: f64 },
    #[error("vertex {0} is not interior to the ball")]
    NotInterior(usize),
    #[error("ball radius {radius} too small for witness level {level}")]
    BallTooSmall { radius: usize, level: usize },
    #[error("decay rate {alpha} is not within {window} of 1")]
    NotNearBoundary { alpha: f64, window: f64 },
    #[error(transparent)]
    Ratio(#[from] RatioError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SolverError {
    #[error("iteration diverged after {iterations} iterations (last step {last_step:.3e})")]
    Divergence { iterations: usize, last_step: f64 },
    #[error("denominator vanished at edge {edge} (pole hit)")]
    PoleHit { edge: usize },
    #[error("initial assignment contains an infinite ratio at edge {0}")]
    InvalidInit(usize),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LiftError {
    #[error("base eigenvalue {re}+{im}i has no lift eigenvalue within tol {tol}")]
    MatchFailure { re: f64, im: f64, tol: f64 },
    #[error("eigenvalue {re}+{im}i falls outside the raster bounds")]
    RegionMismatch { re: f64, im: f64 },
}

#[derive(Error, Debug)]
pub enum IoFormatError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad raster file: {0}")]
    BadRaster(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
