//! Chart-level Riemannian metrics.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dual::{Real, D1, D2};
use crate::error::{Error, Result};

/// Dense symmetric matrix over any scalar; `set` writes both triangles so
/// every value built through it is exactly symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMat<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Real> SymMat<S> {
    pub fn zeros(n: usize) -> Self {
        SymMat {
            n,
            data: vec![S::cst(0.0); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Copies `block` into the diagonal block starting at `offset`, scaled by `scale`.
    pub fn set_block(&mut self, offset: usize, block: &SymMat<S>, scale: S) {
        for i in 0..block.n {
            for j in i..block.n {
                self.set(offset + i, offset + j, scale * block.get(i, j));
            }
        }
    }

    pub fn map<T: Real>(&self, f: impl Fn(S) -> T) -> SymMat<T> {
        SymMat {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }
}

impl SymMat<f64> {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut out = SymMat::zeros(n);
        for i in 0..n {
            for j in i..n {
                out.set(i, j, 0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
        out
    }
}

/// Scalars the type-erased metric interface can evaluate at.
pub trait MetricScalar: Real {
    fn eval_source(src: &dyn MetricSource, x: &[Self]) -> Option<SymMat<Self>>;
}

impl MetricScalar for f64 {
    fn eval_source(src: &dyn MetricSource, x: &[Self]) -> Option<SymMat<Self>> {
        Some(src.eval_f64(x))
    }
}

impl MetricScalar for D1 {
    fn eval_source(src: &dyn MetricSource, x: &[Self]) -> Option<SymMat<Self>> {
        src.eval_d1(x)
    }
}

impl MetricScalar for D2 {
    fn eval_source(src: &dyn MetricSource, x: &[Self]) -> Option<SymMat<Self>> {
        src.eval_d2(x)
    }
}

/// A metric written once, generically over the scalar type.
pub trait MetricExpr: Send + Sync + 'static {
    fn dim(&self) -> usize;

    fn components<S: MetricScalar>(&self, x: &[S]) -> SymMat<S>;

    /// False when some part can only be evaluated at plain `f64`.
    fn forward_capable(&self) -> bool {
        true
    }
}

/// Type-erased evaluator behind a [`ChartMetric`].
pub trait MetricSource: Send + Sync {
    fn dim(&self) -> usize;
    fn eval_f64(&self, x: &[f64]) -> SymMat<f64>;
    fn eval_d1(&self, x: &[D1]) -> Option<SymMat<D1>>;
    fn eval_d2(&self, x: &[D2]) -> Option<SymMat<D2>>;
    fn forward_capable(&self) -> bool;
}

struct Smooth<E>(E);

impl<E: MetricExpr> MetricSource for Smooth<E> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn eval_f64(&self, x: &[f64]) -> SymMat<f64> {
        self.0.components(x)
    }

    fn eval_d1(&self, x: &[D1]) -> Option<SymMat<D1>> {
        self.0.forward_capable().then(|| self.0.components(x))
    }

    fn eval_d2(&self, x: &[D2]) -> Option<SymMat<D2>> {
        self.0.forward_capable().then(|| self.0.components(x))
    }

    fn forward_capable(&self) -> bool {
        self.0.forward_capable()
    }
}

struct BlackBox<F> {
    dim: usize,
    f: F,
}

impl<F> MetricSource for BlackBox<F>
where
    F: Fn(&[f64]) -> SymMat<f64> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_f64(&self, x: &[f64]) -> SymMat<f64> {
        (self.f)(x)
    }

    fn eval_d1(&self, _: &[D1]) -> Option<SymMat<D1>> {
        None
    }

    fn eval_d2(&self, _: &[D2]) -> Option<SymMat<D2>> {
        None
    }

    fn forward_capable(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Axis {
    pub fn interval(lo: f64, hi: f64) -> Self {
        Axis {
            lo,
            hi,
            periodic: false,
        }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Axis {
            lo,
            hi,
            periodic: true,
        }
    }

    pub fn period(&self) -> Option<f64> {
        self.periodic.then_some(self.hi - self.lo)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.periodic || (v >= self.lo && v <= self.hi)
    }
}

/// Axis-aligned coordinate box with per-axis periodicity.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainBox {
    pub axes: Vec<Axis>,
}

impl DomainBox {
    pub fn new(axes: Vec<Axis>) -> Self {
        DomainBox { axes }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.axes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.axes.len(),
                found: x.len(),
            });
        }
        for (axis, (a, &v)) in self.axes.iter().zip(x).enumerate() {
            if !v.is_finite() || !a.contains(v) {
                return Err(Error::OutsideDomain {
                    point: x.to_vec(),
                    axis,
                });
            }
        }
        Ok(())
    }

    /// Random point: periodic axes uniform over one period, interval axes
    /// uniform on the middle `1 − 2·inset` fraction.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R, inset: f64) -> Vec<f64> {
        self.axes
            .iter()
            .map(|a| {
                let u: f64 = rng.random();
                let w = a.hi - a.lo;
                if a.periodic {
                    a.lo + w * u
                } else {
                    a.lo + inset * w + (1.0 - 2.0 * inset) * w * u
                }
            })
            .collect()
    }

    /// Concatenates boxes in order (product chart).
    pub fn product(parts: &[&DomainBox]) -> Self {
        DomainBox {
            axes: parts.iter().flat_map(|b| b.axes.iter().copied()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeScheme {
    /// Nested dual numbers; exact to rounding.
    ForwardMode,
    /// Central differences; `h = None` picks `max(1e-5, |x| 1e-7)`.
    CentralDifference { h: Option<f64> },
}

/// A smooth field of symmetric positive-definite matrices over a chart.
#[derive(Clone)]
pub struct ChartMetric {
    name: Arc<str>,
    source: Arc<dyn MetricSource>,
    domain: DomainBox,
    scheme: DerivativeScheme,
}

impl fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMetric")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("domain", &self.domain)
            .field("scheme", &self.scheme)
            .finish()
    }
}

impl ChartMetric {
    /// A metric given as a generic expression. Uses forward mode when every
    /// part of the expression supports it.
    pub fn from_expr<E: MetricExpr>(name: impl Into<String>, expr: E, domain: DomainBox) -> Self {
        assert_eq!(expr.dim(), domain.dim(), "expression and domain dimensions differ");
        let scheme = if expr.forward_capable() {
            DerivativeScheme::ForwardMode
        } else {
            DerivativeScheme::CentralDifference { h: None }
        };
        ChartMetric {
            name: Arc::from(name.into()),
            source: Arc::new(Smooth(expr)),
            domain,
            scheme,
        }
    }

    /// A metric known only through plain evaluations; derivatives come from
    /// central differences.
    pub fn black_box<F>(name: impl Into<String>, domain: DomainBox, f: F) -> Self
    where
        F: Fn(&[f64]) -> SymMat<f64> + Send + Sync + 'static,
    {
        ChartMetric {
            name: Arc::from(name.into()),
            source: Arc::new(BlackBox {
                dim: domain.dim(),
                f,
            }),
            domain,
            scheme: DerivativeScheme::CentralDifference { h: None },
        }
    }

    pub fn with_scheme(mut self, scheme: DerivativeScheme) -> Result<Self> {
        if scheme == DerivativeScheme::ForwardMode && !self.source.forward_capable() {
            return Err(Error::ForwardModeUnavailable(self.name.to_string()));
        }
        self.scheme = scheme;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn forward_capable(&self) -> bool {
        self.source.forward_capable()
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        self.source.eval_f64(x).to_matrix()
    }

    pub fn eval_sym(&self, x: &[f64]) -> SymMat<f64> {
        self.source.eval_f64(x)
    }

    /// Generic evaluation for use inside other metric expressions.
    ///
    /// Composite expressions report `forward_capable() == false` when a part
    /// is a black box, so dual evaluation is never requested from one.
    pub fn components<S: MetricScalar>(&self, x: &[S]) -> SymMat<S> {
        S::eval_source(self.source.as_ref(), x)
            .unwrap_or_else(|| panic!("metric '{}' has no dual-number evaluator", self.name))
    }

    /// Domain membership plus positive definiteness at `x`.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        self.domain.check(x)?;
        check_positive_definite(&self.eval(x), x).map(|_| ())
    }

    /// Max deviation `|g(x + period e_i) - g(x)|` over the periodic axes and sample points.
    pub fn periodicity_residual(&self, points: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0_f64;
        for x in points {
            let g0 = self.eval(x);
            for (i, axis) in self.domain.axes.iter().enumerate() {
                if let Some(p) = axis.period() {
                    let mut y = x.clone();
                    y[i] += p;
                    worst = worst.max((self.eval(&y) - &g0).amax());
                }
            }
        }
        worst
    }
}

/// Cholesky factor of `g`, or a degenerate-metric error carrying the
/// smallest eigenvalue.
pub fn check_positive_definite(
    g: &DMatrix<f64>,
    x: &[f64],
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    if g.iter().all(|v| v.is_finite()) {
        if let Some(ch) = g.clone().cholesky() {
            return Ok(ch);
        }
    }
    let min_eigenvalue = if g.iter().all(|v| v.is_finite()) {
        SymmetricEigen::new(g.clone()).eigenvalues.min()
    } else {
        f64::NAN
    };
    Err(Error::DegenerateMetric {
        point: x.to_vec(),
        min_eigenvalue,
    })
}
