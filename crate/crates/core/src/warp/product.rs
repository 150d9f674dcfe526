//! Warped products as chart metrics, and the bridge between chart-level
//! planes and the closed-form frame data.

use nalgebra::DVector;

use crate::engine::chart::{Axis, ChartMetric, DomainBox, MetricExpr, MetricScalar, SymMat};
use crate::engine::curvature::{christoffel_at, gram_determinant, riemann_at};
use crate::engine::models;
use crate::error::{Error, Result};
use crate::warp::frame::{convex_weights, curvature_terms, doubly_warped_K, DoublyWarpedFrame};
use crate::warp::function::WarpFunction;

/// `Σ φₖ(αt)² σₖ + α² dt²`, t last.
struct WarpedExpr {
    factors: Vec<(ChartMetric, WarpFunction)>,
    alpha: f64,
    dim: usize,
}

impl MetricExpr for WarpedExpr {
    fn dim(&self) -> usize {
        self.dim
    }

    fn components<S: MetricScalar>(&self, x: &[S]) -> SymMat<S> {
        let t = x[self.dim - 1];
        let tau = t * self.alpha;
        let mut m = SymMat::zeros(self.dim);
        let mut offset = 0;
        for (sigma, phi) in &self.factors {
            let n = sigma.dim();
            let block: SymMat<S> = sigma.components(&x[offset..offset + n]);
            m.set_block(offset, &block, phi.lift(tau).square());
            offset += n;
        }
        m.set(self.dim - 1, self.dim - 1, S::cst(self.alpha * self.alpha));
        m
    }
}

fn warped_chart(
    name: String,
    factors: Vec<(ChartMetric, WarpFunction)>,
    alpha: f64,
    t_domain: (f64, f64),
) -> Result<ChartMetric> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must be positive",
        });
    }
    if !(t_domain.0 < t_domain.1) {
        return Err(Error::InvalidParameter {
            name: "t_domain",
            value: t_domain.1,
            reason: "upper end must exceed lower end",
        });
    }
    for (_, phi) in &factors {
        phi.rescaled(alpha).check_positive_on(t_domain.0, t_domain.1, 257)?;
    }
    let mut axes = Vec::new();
    for (sigma, _) in &factors {
        axes.extend(sigma.domain().axes.iter().copied());
    }
    axes.push(Axis::interval(t_domain.0, t_domain.1));
    let domain = DomainBox::new(axes);
    let dim = domain.dim();
    if factors.iter().all(|(s, _)| s.forward_capable()) {
        Ok(ChartMetric::from_expr(name, WarpedExpr { factors, alpha, dim }, domain))
    } else {
        Ok(ChartMetric::black_box(name, domain, move |x: &[f64]| {
            let t = x[dim - 1] * alpha;
            let mut m = SymMat::zeros(dim);
            let mut offset = 0;
            for (sigma, phi) in &factors {
                let n = sigma.dim();
                let block = sigma.eval_sym(&x[offset..offset + n]);
                m.set_block(offset, &block, phi.value(t).powi(2));
                offset += n;
            }
            m.set(dim - 1, dim - 1, alpha * alpha);
            m
        }))
    }
}

/// `φ²σ + dt²` on `M × t_domain`.
pub fn assemble_warped(sigma: &ChartMetric, phi: &WarpFunction, t_domain: (f64, f64)) -> Result<ChartMetric> {
    warped_chart(
        format!("warped({},{})", sigma.name(), phi.name()),
        vec![(sigma.clone(), phi.clone())],
        1.0,
        t_domain,
    )
}

/// `φ₁²σ₁ + φ₂²σ₂ + dt²` on `M₁ × M₂ × t_domain`, coordinates `(x₁, x₂, t)`.
pub fn assemble_doubly_warped(
    sigma1: &ChartMetric,
    sigma2: &ChartMetric,
    phi1: &WarpFunction,
    phi2: &WarpFunction,
    t_domain: (f64, f64),
) -> Result<ChartMetric> {
    assemble_rescaled(sigma1, sigma2, phi1, phi2, 1.0, t_domain)
}

/// `φ₁²(αt)σ₁ + φ₂²(αt)σ₂ + α²dt²` on `M₁ × M₂ × t_domain`.
pub fn assemble_rescaled(
    sigma1: &ChartMetric,
    sigma2: &ChartMetric,
    phi1: &WarpFunction,
    phi2: &WarpFunction,
    alpha: f64,
    t_domain: (f64, f64),
) -> Result<ChartMetric> {
    let name = if alpha == 1.0 {
        format!("doubly_warped({},{};{},{})", sigma1.name(), phi1.name(), sigma2.name(), phi2.name())
    } else {
        format!(
            "doubly_warped({},{};{},{};α={alpha})",
            sigma1.name(),
            phi1.name(),
            sigma2.name(),
            phi2.name()
        )
    };
    warped_chart(
        name,
        vec![(sigma1.clone(), phi1.clone()), (sigma2.clone(), phi2.clone())],
        alpha,
        t_domain,
    )
}

/// Where factor sectional curvatures come from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FactorCurvature {
    Constant(f64),
    /// Queried from the curvature engine on the factor chart.
    Oracle,
}

impl FactorCurvature {
    /// Constant value for model factors, oracle otherwise.
    pub fn of(metric: &ChartMetric) -> Self {
        match models::constant_curvature(metric) {
            Some(k) => FactorCurvature::Constant(k),
            None => FactorCurvature::Oracle,
        }
    }
}

/// A doubly warped product `φ₁²(αt)σ₁ + φ₂²(αt)σ₂ + α²dt²` kept in factored
/// form, so the closed-form curvature and the chart metric can be compared.
#[derive(Clone, Debug)]
pub struct DoublyWarped {
    pub sigma1: ChartMetric,
    pub sigma2: ChartMetric,
    pub phi1: WarpFunction,
    pub phi2: WarpFunction,
    pub alpha: f64,
    pub t_domain: (f64, f64),
    pub k1: FactorCurvature,
    pub k2: FactorCurvature,
    chart: ChartMetric,
}

/// Tangent vector classes of a doubly warped product.
#[derive(Clone, Debug, PartialEq)]
pub enum TaggedVector {
    Dt,
    U(DVector<f64>),
    V(DVector<f64>),
}

/// Basis 2-form types of Λ² of a doubly warped product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoFormType {
    DtU,
    DtV,
    UV,
    UU,
    VV,
}

/// Image of a basis 2-form under the curvature operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TwoFormImage {
    /// `ℛ(w) = coefficient · w`
    Scaled { coefficient: f64 },
    /// `ℛ(w) = factor_scale · ℛᵢ(w) + shift · w`, with `ℛᵢ` the factor operator
    /// in its own metric `σᵢ`.
    FactorShifted { factor: u8, factor_scale: f64, shift: f64 },
}

impl TwoFormImage {
    /// Eigenvalue for a factor 2-form with factor curvature-operator eigenvalue `k`.
    pub fn eigenvalue(&self, k: f64) -> f64 {
        match *self {
            TwoFormImage::Scaled { coefficient } => coefficient,
            TwoFormImage::FactorShifted { factor_scale, shift, .. } => factor_scale * k + shift,
        }
    }
}

/// Closed-form image of each basis 2-form type at `t`.
pub fn warped_curvature_images(phi1: &WarpFunction, phi2: &WarpFunction, t: f64, form: TwoFormType) -> TwoFormImage {
    let [p1, d1, dd1] = phi1.jet(t);
    let [p2, d2, dd2] = phi2.jet(t);
    match form {
        TwoFormType::DtU => TwoFormImage::Scaled { coefficient: -dd1 / p1 },
        TwoFormType::DtV => TwoFormImage::Scaled { coefficient: -dd2 / p2 },
        TwoFormType::UV => TwoFormImage::Scaled {
            coefficient: -d1 * d2 / (p1 * p2),
        },
        TwoFormType::UU => TwoFormImage::FactorShifted {
            factor: 1,
            factor_scale: 1.0 / (p1 * p1),
            shift: -d1 * d1 / (p1 * p1),
        },
        TwoFormType::VV => TwoFormImage::FactorShifted {
            factor: 2,
            factor_scale: 1.0 / (p2 * p2),
            shift: -d2 * d2 / (p2 * p2),
        },
    }
}

impl DoublyWarped {
    pub fn new(
        sigma1: ChartMetric,
        sigma2: ChartMetric,
        phi1: WarpFunction,
        phi2: WarpFunction,
        t_domain: (f64, f64),
    ) -> Result<Self> {
        Self::rescaled(sigma1, sigma2, phi1, phi2, 1.0, t_domain)
    }

    pub fn rescaled(
        sigma1: ChartMetric,
        sigma2: ChartMetric,
        phi1: WarpFunction,
        phi2: WarpFunction,
        alpha: f64,
        t_domain: (f64, f64),
    ) -> Result<Self> {
        let chart = assemble_rescaled(&sigma1, &sigma2, &phi1, &phi2, alpha, t_domain)?;
        Ok(DoublyWarped {
            k1: FactorCurvature::of(&sigma1),
            k2: FactorCurvature::of(&sigma2),
            sigma1,
            sigma2,
            phi1,
            phi2,
            alpha,
            t_domain,
            chart,
        })
    }

    pub fn with_factor_curvatures(mut self, k1: FactorCurvature, k2: FactorCurvature) -> Self {
        self.k1 = k1;
        self.k2 = k2;
        self
    }

    pub fn chart(&self) -> &ChartMetric {
        &self.chart
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.sigma1.dim(), self.sigma2.dim())
    }

    /// `(x₁, x₂, t)`
    pub fn split<'a>(&self, point: &'a [f64]) -> (&'a [f64], &'a [f64], f64) {
        let (n1, n2) = self.dims();
        (&point[..n1], &point[n1..n1 + n2], point[n1 + n2])
    }

    /// The five generating terms at chart time `t` (factor curvatures given).
    pub fn terms(&self, t: f64, k1: f64, k2: f64) -> [f64; 5] {
        let tau = self.alpha * t;
        curvature_terms(self.phi1.jet(tau), self.phi2.jet(tau), k1, k2)
    }

    fn factor_k(&self, which: FactorCurvature, sigma: &ChartMetric, x: &[f64], a: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
        if sigma.dim() < 2 {
            return Ok(f64::NAN);
        }
        let g = sigma.eval(x);
        let gram = gram_determinant(&g, a.as_slice(), b.as_slice());
        let scale = (a.transpose() * &g * a)[(0, 0)] * (b.transpose() * &g * b)[(0, 0)];
        if !(gram > 1e-12 * scale) {
            return Ok(f64::NAN);
        }
        match which {
            FactorCurvature::Constant(k) => Ok(k),
            FactorCurvature::Oracle => riemann_at(sigma, x)?.sectional(a.as_slice(), b.as_slice()),
        }
    }

    /// Orthonormal frame of span(a, b) in the sense of the closed-form
    /// formula: `b` is replaced by a combination with no ∂ component, both
    /// are orthonormalised, and chart t-components are rescaled by α.
    pub fn frame_from_plane(&self, point: &[f64], a: &[f64], b: &[f64]) -> Result<DoublyWarpedFrame> {
        let (n1, n2) = self.dims();
        let n = n1 + n2 + 1;
        if point.len() != n || a.len() != n || b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: point.len().min(a.len()).min(b.len()),
            });
        }
        let (x1, x2, t) = self.split(point);
        let tau = self.alpha * t;
        let p1 = self.phi1.value(tau);
        let p2 = self.phi2.value(tau);
        let g1 = self.sigma1.eval(x1) * (p1 * p1);
        let g2 = self.sigma2.eval(x2) * (p2 * p2);
        let av = DVector::from_column_slice(a);
        let bv = DVector::from_column_slice(b);
        let (at, bt) = (a[n - 1] * self.alpha, b[n - 1] * self.alpha);
        let w = if bt == 0.0 {
            bv.clone()
        } else if at == 0.0 {
            av.clone()
        } else {
            &av * bt - &bv * at
        };
        let w_u = w.rows(0, n1).into_owned();
        let w_v = w.rows(n1, n2).into_owned();
        let nw = (w_u.transpose() * &g1 * &w_u)[(0, 0)] + (w_v.transpose() * &g2 * &w_v)[(0, 0)];
        if !(nw > 0.0) {
            return Err(Error::DegeneratePlane { gram: 0.0 });
        }
        // the complementary spanning vector: whichever of a, b carries ∂
        let z = if bt == 0.0 {
            av
        } else if at == 0.0 {
            bv
        } else if at.abs() >= bt.abs() {
            av
        } else {
            bv
        };
        let zt = z[n - 1] * self.alpha;
        let u2 = w_u / nw.sqrt();
        let v2 = w_v / nw.sqrt();
        let mut u1 = z.rows(0, n1).into_owned();
        let mut v1 = z.rows(n1, n2).into_owned();
        let c = (u1.transpose() * &g1 * &u2)[(0, 0)] + (v1.transpose() * &g2 * &v2)[(0, 0)];
        u1 -= &u2 * c;
        v1 -= &v2 * c;
        let na = zt * zt + (u1.transpose() * &g1 * &u1)[(0, 0)] + (v1.transpose() * &g2 * &v1)[(0, 0)];
        if !(na > 1e-24) {
            return Err(Error::DegeneratePlane { gram: na });
        }
        let na = na.sqrt();
        u1 /= na;
        v1 /= na;
        let s = zt / na;
        let k1 = self.factor_k(self.k1, &self.sigma1, x1, &u1, &u2)?;
        let k2 = self.factor_k(self.k2, &self.sigma2, x2, &v1, &v2)?;
        DoublyWarpedFrame::new(u1, v1, s, u2, v2, g1, g2, k1, k2)
    }

    /// Closed-form sectional curvature of span(a, b) at a chart point.
    #[allow(non_snake_case)]
    pub fn closed_form_K(&self, point: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
        let frame = self.frame_from_plane(point, a, b)?;
        let (_, _, t) = self.split(point);
        doubly_warped_K(&self.phi1, &self.phi2, self.alpha * t, &frame)
    }

    /// Convex weights and terms of span(a, b).
    pub fn decomposition(&self, point: &[f64], a: &[f64], b: &[f64]) -> Result<([f64; 5], [f64; 5])> {
        let frame = self.frame_from_plane(point, a, b)?;
        let (_, _, t) = self.split(point);
        Ok((convex_weights(&frame), self.terms(t, frame.k1, frame.k2)))
    }

    fn embed(&self, v: &TaggedVector) -> Result<DVector<f64>> {
        let (n1, n2) = self.dims();
        let mut out = DVector::zeros(n1 + n2 + 1);
        match v {
            TaggedVector::Dt => out[n1 + n2] = 1.0,
            TaggedVector::U(u) => {
                if u.len() != n1 {
                    return Err(Error::DimensionMismatch { expected: n1, found: u.len() });
                }
                out.rows_mut(0, n1).copy_from(u);
            }
            TaggedVector::V(v) => {
                if v.len() != n2 {
                    return Err(Error::DimensionMismatch { expected: n2, found: v.len() });
                }
                out.rows_mut(n1, n2).copy_from(v);
            }
        }
        Ok(out)
    }

    /// `∇_X Y` for coordinate-constant fields, from the closed-form
    /// connection identities; product-chart components. Requires α = 1.
    pub fn warped_connection_terms(&self, point: &[f64], x: &TaggedVector, y: &TaggedVector) -> Result<DVector<f64>> {
        if self.alpha != 1.0 {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "connection identities are stated for the unrescaled metric",
            });
        }
        let (n1, n2) = self.dims();
        let n = n1 + n2 + 1;
        let (x1, x2, t) = self.split(point);
        let [p1, d1, _] = self.phi1.jet(t);
        let [p2, d2, _] = self.phi2.jet(t);
        use TaggedVector::*;
        let out = match (x, y) {
            (Dt, Dt) | (U(_), V(_)) | (V(_), U(_)) => DVector::zeros(n),
            (Dt, U(_)) | (U(_), Dt) => {
                let u = if let U(u) = x { u } else if let U(u) = y { u } else { unreachable!() };
                self.embed(&U(u.clone()))? * (d1 / p1)
            }
            (Dt, V(_)) | (V(_), Dt) => {
                let v = if let V(v) = x { v } else if let V(v) = y { v } else { unreachable!() };
                self.embed(&V(v.clone()))? * (d2 / p2)
            }
            (U(a), U(b)) => {
                let g1 = self.sigma1.eval(x1) * (p1 * p1);
                let inner = (a.transpose() * &g1 * b)[(0, 0)];
                let gamma = christoffel_at(&self.sigma1, x1)?.contract(a.as_slice(), b.as_slice());
                let mut out = self.embed(&U(gamma))?;
                out[n - 1] = -(d1 / p1) * inner;
                out
            }
            (V(a), V(b)) => {
                let g2 = self.sigma2.eval(x2) * (p2 * p2);
                let inner = (a.transpose() * &g2 * b)[(0, 0)];
                let gamma = christoffel_at(&self.sigma2, x2)?.contract(a.as_slice(), b.as_slice());
                let mut out = self.embed(&V(gamma))?;
                out[n - 1] = -(d2 / p2) * inner;
                out
            }
        };
        Ok(out)
    }

    /// The same covariant derivative computed by the engine on the assembled chart.
    pub fn engine_connection(&self, point: &[f64], x: &TaggedVector, y: &TaggedVector) -> Result<DVector<f64>> {
        let a = self.embed(x)?;
        let b = self.embed(y)?;
        Ok(christoffel_at(&self.chart, point)?.contract(a.as_slice(), b.as_slice()))
    }
}

/// Tagged vector → product-chart vector for a given factor split.
pub fn tagged_to_chart(dims: (usize, usize), v: &TaggedVector) -> DVector<f64> {
    let (n1, n2) = dims;
    let mut out = DVector::zeros(n1 + n2 + 1);
    match v {
        TaggedVector::Dt => out[n1 + n2] = 1.0,
        TaggedVector::U(u) => out.rows_mut(0, n1).copy_from(u),
        TaggedVector::V(w) => out.rows_mut(n1, n2).copy_from(w),
    }
    out
}
