//! Chart metrics, derivative jets and curvature.

pub mod chart;
pub mod curvature;
pub mod jet;
pub mod models;

pub use chart::{Axis, ChartMetric, DerivativeScheme, DomainBox, MetricExpr, MetricScalar, SymMat};
pub use curvature::{
    christoffel_at, curvature_operator_at, koszul_residual, riemann_at, sectional_at, Christoffel,
    CurvatureOperator, CurvatureTensor4, TangentPlane,
};
pub use jet::{metric_jet, MetricJet};
