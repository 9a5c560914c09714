use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("element {index} out of range (mesh has {count} elements)")]
    ElementOutOfRange { index: usize, count: usize },
    #[error("local coordinate {0:?} lies outside the reference element")]
    InvalidLocalCoord(Vec<f64>),
    #[error("element {0} has zero measure")]
    DegenerateElement(usize),
    #[error("degenerate normal at {location}: norm {norm:e}")]
    DegenerateNormal { location: String, norm: f64 },
    #[error("normal vector is not unit length (|n| = {0})")]
    NonUnitNormal(f64),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("inconsistent orientation: {0}")]
    Orientation(String),
    #[error("mass matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("jump fields are stale: built for step {built}, requested for step {requested}")]
    StaleJumpFields { built: u64, requested: u64 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid boundary specification: {0}")]
    InvalidBoundary(String),
    #[error("under-resolved interface: {count} crossings on leg {leg}")]
    UnderResolvedInterface { leg: String, count: usize },
    #[error("interface node {node} at {position:?} is outside the grid interior")]
    OutsideGrid { node: usize, position: [f64; 2] },
    #[error("linear solver did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("incompatible volume source: net boundary flux plus source integral is {mismatch:e}")]
    IncompatibleSource { mismatch: f64 },
    #[error("CFL number {cfl} exceeds 0.5 at step {step}")]
    CflExceeded { cfl: f64, step: u64 },
    #[error("controller runaway: |Q| = {q:e} exceeds cap {cap:e}")]
    ControllerRunaway { q: f64, cap: f64 },
    #[error("no oscillation detected")]
    NoOscillation,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;
