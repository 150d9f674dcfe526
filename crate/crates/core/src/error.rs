use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("degenerate metric at {point:?}: smallest eigenvalue {min_eigenvalue:e}")]
    DegenerateMetric { point: Vec<f64>, min_eigenvalue: f64 },

    #[error("point {point:?} lies outside the chart domain on axis {axis}")]
    OutsideDomain { point: Vec<f64>, axis: usize },

    #[error("difference stencil on axis {axis} does not fit in the domain at {point:?}")]
    StencilOutOfDomain { point: Vec<f64>, axis: usize },

    #[error("metric '{0}' has no forward-mode evaluator")]
    ForwardModeUnavailable(String),

    #[error("non-finite curvature at {point:?}: metric values overflow the floating-point range")]
    NonFiniteCurvature { point: Vec<f64> },

    #[error("degenerate plane: Gram determinant {gram:e}")]
    DegeneratePlane { gram: f64 },

    #[error("frame not orthonormal: constraint residual {residual:e}")]
    FrameNotOrthonormal { residual: f64 },

    #[error("warp function '{name}' is not positive at t = {t}: value {value:e}")]
    NonPositiveWarp { name: String, t: f64, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("gluing incompatibility at breakpoint t = {breakpoint}: mismatch {mismatch:e}")]
    GluingIncompatible { breakpoint: f64, mismatch: f64 },

    #[error("isotopy endpoint violation: {0}")]
    IsotopyEndpoint(&'static str),

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("heat flow blew up at step {step}")]
    BlowUp { step: usize },

    #[error("curve winding changed from {before:?} to {after:?}")]
    WindingChanged { before: Vec<i64>, after: Vec<i64> },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),
}

pub type Result<T> = std::result::Result<T, Error>;
