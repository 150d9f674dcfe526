//! Standard charts: flat, spherical and hyperbolic models.

use std::f64::consts::{PI, TAU};

use crate::engine::chart::{Axis, ChartMetric, DomainBox, MetricExpr, MetricScalar, SymMat};

/// θ-range of the sphere chart.
pub const SPHERE_THETA: (f64, f64) = (0.0, PI);
/// Height range of the hyperbolic half-plane and half-space charts.
pub const HALF_PLANE_HEIGHT: (f64, f64) = (1e-3, 1e3);
/// Width of the hyperbolic cylinder chart in the non-periodic direction.
pub const CYLINDER_HALF_WIDTH: f64 = 3.0;

struct Identity(usize);

impl MetricExpr for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn components<S: MetricScalar>(&self, _x: &[S]) -> SymMat<S> {
        let mut m = SymMat::zeros(self.0);
        for i in 0..self.0 {
            m.set(i, i, S::cst(1.0));
        }
        m
    }
}

/// `g = I` on ℝⁿ (box `[-10, 10]ⁿ`).
pub fn euclidean(n: usize) -> ChartMetric {
    ChartMetric::from_expr(
        format!("euclidean{n}"),
        Identity(n),
        DomainBox::new(vec![Axis::interval(-10.0, 10.0); n]),
    )
}

/// `g = I` with every axis periodic of period 2π.
pub fn flat_torus(n: usize) -> ChartMetric {
    ChartMetric::from_expr(
        format!("flat_torus{n}"),
        Identity(n),
        DomainBox::new(vec![Axis::periodic(0.0, TAU); n]),
    )
}

/// The canonical circle `du²`, u ∈ [0, 2π).
pub fn flat_circle() -> ChartMetric {
    ChartMetric::from_expr("circle", Identity(1), DomainBox::new(vec![Axis::periodic(0.0, TAU)]))
}

struct Sphere;

impl MetricExpr for Sphere {
    fn dim(&self) -> usize {
        2
    }

    fn components<S: MetricScalar>(&self, x: &[S]) -> SymMat<S> {
        let mut m = SymMat::zeros(2);
        m.set(0, 0, S::cst(1.0));
        m.set(1, 1, x[0].sin().square());
        m
    }
}

/// Unit round sphere `dθ² + sin²θ dφ²`.
pub fn unit_sphere() -> ChartMetric {
    ChartMetric::from_expr(
        "unit_sphere",
        Sphere,
        DomainBox::new(vec![
            Axis::interval(SPHERE_THETA.0, SPHERE_THETA.1),
            Axis::periodic(0.0, TAU),
        ]),
    )
}

struct Polar;

impl MetricExpr for Polar {
    fn dim(&self) -> usize {
        2
    }

    fn components<S: MetricScalar>(&self, x: &[S]) -> SymMat<S> {
        let mut m = SymMat::zeros(2);
        m.set(0, 0, S::cst(1.0));
        m.set(1, 1, x[0].square());
        m
    }
}

/// Flat plane in polar coordinates `dr² + r² dθ²`.
pub fn polar_plane() -> ChartMetric {
    ChartMetric::from_expr(
        "polar_plane",
        Polar,
        DomainBox::new(vec![Axis::interval(0.0, 10.0), Axis::periodic(0.0, TAU)]),
    )
}

struct HalfSpace(usize);

impl MetricExpr for HalfSpace {
    fn dim(&self) -> usize {
        self.0
    }

    fn components<S: MetricScalar>(&self, x: &[S]) -> SymMat<S> {
        let n = self.0;
        let w = x[n - 1].square().recip();
        let mut m = SymMat::zeros(n);
        for i in 0..n {
            m.set(i, i, w);
        }
        m
    }
}

/// Upper half-space model of hyperbolic n-space; the last coordinate is the height.
pub fn hyperbolic_half_space(n: usize) -> ChartMetric {
    let mut axes = vec![Axis::interval(-10.0, 10.0); n - 1];
    axes.push(Axis::interval(HALF_PLANE_HEIGHT.0, HALF_PLANE_HEIGHT.1));
    ChartMetric::from_expr(format!("hyperbolic_half_space{n}"), HalfSpace(n), DomainBox::new(axes))
}

/// Upper half-plane `(dx² + dy²)/y²`.
pub fn hyperbolic_half_plane() -> ChartMetric {
    hyperbolic_half_space(2)
}

struct Cylinder;

impl MetricExpr for Cylinder {
    fn dim(&self) -> usize {
        2
    }

    fn components<S: MetricScalar>(&self, x: &[S]) -> SymMat<S> {
        let mut m = SymMat::zeros(2);
        m.set(0, 0, x[1].cosh().square());
        m.set(1, 1, S::cst(1.0));
        m
    }
}

/// Hyperbolic cylinder `cosh²(y) dx² + dy²`, x periodic: a hyperbolic
/// annulus around the closed geodesic y = 0.
pub fn hyperbolic_cylinder() -> ChartMetric {
    ChartMetric::from_expr(
        "hyperbolic_cylinder",
        Cylinder,
        DomainBox::new(vec![
            Axis::periodic(0.0, TAU),
            Axis::interval(-CYLINDER_HALF_WIDTH, CYLINDER_HALF_WIDTH),
        ]),
    )
}

/// Constant sectional curvature of a named model, when it has one.
pub fn constant_curvature(metric: &ChartMetric) -> Option<f64> {
    let name = metric.name();
    if name == "unit_sphere" {
        Some(1.0)
    } else if name.starts_with("hyperbolic") {
        Some(-1.0)
    } else if name.starts_with("euclidean") || name.starts_with("flat") || name == "circle" || name == "polar_plane" {
        Some(0.0)
    } else {
        None
    }
}
