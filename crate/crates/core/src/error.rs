use std::fmt;

use thiserror::Error;

/// Partial operation that failed during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainOp {
    Sqrt,
    Log,
    Div,
    Pow,
    Abs,
}

impl fmt::Display for DomainOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DomainOp::Sqrt => "sqrt",
            DomainOp::Log => "log",
            DomainOp::Div => "division",
            DomainOp::Pow => "power",
            DomainOp::Abs => "abs",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {position}: {message} (found {token:?})")]
    Syntax {
        position: usize,
        token: String,
        message: String,
    },
    #[error("unknown identifier {name:?} at byte {position}")]
    UnknownIdentifier { name: String, position: usize },
    #[error("variable x{index} at byte {position} exceeds dimension {dim}")]
    VariableOutOfRange {
        index: usize,
        dim: usize,
        position: usize,
    },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("{op} is undefined or not differentiable at {point:?}")]
    Domain { op: DomainOp, point: Vec<f64> },
    #[error("evaluation produced a non-finite value at {point:?}")]
    NonFinite { point: Vec<f64> },
    #[error("point {point:?} lies outside the domain box")]
    OutsideDomain { point: Vec<f64> },
    #[error("point {point:?} is within {distance:e} of the excluded set (guard {guard:e})")]
    NearExcludedSet {
        point: Vec<f64>,
        distance: f64,
        guard: f64,
    },
    #[error("point {point:?} has no full stencil support in the grid")]
    StencilSupport { point: Vec<f64> },
    #[error("expected a point of dimension {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("jet degree {0} exceeds the supported maximum of 4")]
    DegreeTooHigh(usize),
    #[error("direction must be non-zero")]
    ZeroDirection,
    #[error("grid axis {axis} has {count} samples; at least {min} are required")]
    InsufficientSamples { axis: usize, count: usize, min: usize },
    #[error("grid axis {axis} is not uniformly spaced")]
    NonUniformSpacing { axis: usize },
    #[error("malformed grid: {0}")]
    MalformedGrid(String),
    #[error("operation requires an analytic field")]
    NotAnalytic,
    #[error("direction is not in the Hessian kernel (normalized curvature {residual:e}, tolerance {tolerance:e})")]
    NotKernelDirection { residual: f64, tolerance: f64 },
    #[error("point is not on a certified ruling: {0}")]
    NotOnRuling(String),
    #[error("sphere of radius {radius} around {center:?} leaves the domain box")]
    SphereOutsideDomain { center: Vec<f64>, radius: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
