use crate::model::Site;
use thiserror::Error;

/// Errors raised by the model, dynamics and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice geometry: {0}")]
    Geometry(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation requires a two-dimensional lattice, got d = {0}")]
    NotTwoDimensional(usize),

    #[error("coupling kernel is not symmetric: k({offset:?}) = {forward} but k(-{offset:?}) = {backward}")]
    AsymmetricKernel {
        offset: Vec<i64>,
        forward: f64,
        backward: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing boundary spin for exterior site {0}")]
    MissingBoundarySpin(Site),

    #[error("site {0} is outside the box")]
    SiteOutsideBox(Site),

    #[error("box has {sites} sites, above the exact ceiling of {ceiling}")]
    ExactCeiling { sites: usize, ceiling: usize },

    #[error("power iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },

    #[error("reference distribution has zero mass at index {0} where the other does not")]
    NotAbsolutelyContinuous(usize),

    #[error("distribution is not stationary for the kernel (TV residual {0:e})")]
    NotStationary(f64),

    #[error("distribution is not strictly positive at index {0}")]
    NotPositive(usize),

    #[error("unsupported transformation case {0}; expected 2 or 3")]
    UnsupportedCase(u8),

    #[error("kernel must have support in {{0, ±e1, ±e2}}")]
    NotNearestNeighbor,

    #[error("kernel sign conditions violated: {0}")]
    SignCondition(String),

    #[error("kernel mixes signs; no monotone coupling is available")]
    MixedSignKernel,

    #[error("site {0} does not carry a -1 spin")]
    NotMinusSite(Site),

    #[error("contour length {requested} exceeds the enumeration budget of {budget}")]
    BudgetExceeded { requested: usize, budget: usize },

    #[error("dual vertex {0:?} has odd degree {1}")]
    ParityViolation([i64; 2], usize),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
