//! Metric values with first and second coordinate derivatives.

use crate::dual::{D1, D2};
use crate::engine::chart::{ChartMetric, DerivativeScheme, DomainBox, SymMat};
use crate::error::{Error, Result};

/// `g_ij`, `∂_k g_ij` and optionally `∂_k ∂_l g_ij` at one point, flat
/// row-major storage.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub n: usize,
    pub g: Vec<f64>,
    /// index `(k * n + i) * n + j`
    pub dg: Vec<f64>,
    /// index `((k * n + l) * n + i) * n + j`
    pub ddg: Option<Vec<f64>>,
}

impl MetricJet {
    #[inline]
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.n + j]
    }

    #[inline]
    pub fn dg(&self, k: usize, i: usize, j: usize) -> f64 {
        self.dg[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn ddg(&self, k: usize, l: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.ddg.as_ref().expect("jet computed without second derivatives")[((k * n + l) * n + i) * n + j]
    }
}

/// Evaluates the metric and its derivatives up to `order` (1 or 2) with the
/// metric's own derivative scheme.
pub fn metric_jet(metric: &ChartMetric, x: &[f64], order: usize) -> Result<MetricJet> {
    metric.domain().check(x)?;
    match metric.scheme() {
        DerivativeScheme::ForwardMode => {
            if !metric.forward_capable() {
                return Err(Error::ForwardModeUnavailable(metric.name().to_string()));
            }
            Ok(if order >= 2 {
                forward_second(metric, x)
            } else {
                forward_first(metric, x)
            })
        }
        DerivativeScheme::CentralDifference { h } => {
            let h = h.unwrap_or_else(|| default_step(x));
            central(metric, x, order, h)
        }
    }
}

/// `max(1e-5, |x| 1e-7)`
pub fn default_step(x: &[f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    (norm * 1e-7).max(1e-5)
}

fn forward_first(metric: &ChartMetric, x: &[f64]) -> MetricJet {
    let n = x.len();
    let g = metric.eval_sym(x).as_slice().to_vec();
    let mut dg = vec![0.0; n * n * n];
    let mut xd: Vec<D1> = x.iter().map(|&v| D1::seed(v, false)).collect();
    for k in 0..n {
        xd[k].du = 1.0;
        let m: SymMat<D1> = metric.components(&xd);
        for (idx, v) in m.as_slice().iter().enumerate() {
            dg[k * n * n + idx] = v.du;
        }
        xd[k].du = 0.0;
    }
    MetricJet {
        n,
        g,
        dg,
        ddg: None,
    }
}

fn forward_second(metric: &ChartMetric, x: &[f64]) -> MetricJet {
    let n = x.len();
    let mut g = vec![0.0; n * n];
    let mut dg = vec![0.0; n * n * n];
    let mut ddg = vec![0.0; n * n * n * n];
    for k in 0..n {
        for l in k..n {
            let xd: Vec<D2> = (0..n).map(|j| D2::seed(x[j], j == l, j == k)).collect();
            let m: SymMat<D2> = metric.components(&xd);
            for (idx, v) in m.as_slice().iter().enumerate() {
                let (val, d_l, d_k, d_kl) = v.parts();
                ddg[(k * n + l) * n * n + idx] = d_kl;
                ddg[(l * n + k) * n * n + idx] = d_kl;
                if k == l {
                    dg[k * n * n + idx] = d_k;
                    if k == 0 {
                        g[idx] = val;
                    }
                }
                if k == 0 {
                    dg[l * n * n + idx] = d_l;
                }
            }
        }
    }
    MetricJet {
        n,
        g,
        dg,
        ddg: Some(ddg),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Stencil {
    Central,
    Forward,
    Backward,
}

fn stencil(domain: &DomainBox, x: &[f64], axis: usize, reach: f64) -> Result<Stencil> {
    let a = domain.axes[axis];
    if a.periodic {
        return Ok(Stencil::Central);
    }
    let v = x[axis];
    let fits = |lo: f64, hi: f64| lo >= a.lo && hi <= a.hi;
    if fits(v - reach, v + reach) {
        Ok(Stencil::Central)
    } else if fits(v, v + 3.0 * reach) {
        Ok(Stencil::Forward)
    } else if fits(v - 3.0 * reach, v) {
        Ok(Stencil::Backward)
    } else {
        Err(Error::StencilOutOfDomain {
            point: x.to_vec(),
            axis,
        })
    }
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(k, d) in moves {
        y[k] += d;
    }
    y
}

/// First derivative along `axis` of the vector-valued `f` at `x`, second
/// order accurate; one-sided near non-periodic boundaries.
fn diff1(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    domain: &DomainBox,
    x: &[f64],
    axis: usize,
    h: f64,
) -> Result<Vec<f64>> {
    let st = stencil(domain, x, axis, h)?;
    let (coeffs, offsets): (&[f64], &[f64]) = match st {
        Stencil::Central => (&[-0.5, 0.5], &[-1.0, 1.0]),
        Stencil::Forward => (&[-1.5, 2.0, -0.5], &[0.0, 1.0, 2.0]),
        Stencil::Backward => (&[1.5, -2.0, 0.5], &[0.0, -1.0, -2.0]),
    };
    let mut out: Option<Vec<f64>> = None;
    for (&c, &o) in coeffs.iter().zip(offsets) {
        let v = f(&shifted(x, &[(axis, o * h)]));
        let acc = out.get_or_insert_with(|| vec![0.0; v.len()]);
        for (a, b) in acc.iter_mut().zip(&v) {
            *a += c * b / h;
        }
    }
    Ok(out.unwrap())
}

fn diff2_diag(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    domain: &DomainBox,
    x: &[f64],
    axis: usize,
    h: f64,
) -> Result<Vec<f64>> {
    let st = stencil(domain, x, axis, h)?;
    let (coeffs, offsets): (&[f64], &[f64]) = match st {
        Stencil::Central => (&[1.0, -2.0, 1.0], &[-1.0, 0.0, 1.0]),
        Stencil::Forward => (&[2.0, -5.0, 4.0, -1.0], &[0.0, 1.0, 2.0, 3.0]),
        Stencil::Backward => (&[2.0, -5.0, 4.0, -1.0], &[0.0, -1.0, -2.0, -3.0]),
    };
    let mut out: Option<Vec<f64>> = None;
    for (&c, &o) in coeffs.iter().zip(offsets) {
        let v = f(&shifted(x, &[(axis, o * h)]));
        let acc = out.get_or_insert_with(|| vec![0.0; v.len()]);
        for (a, b) in acc.iter_mut().zip(&v) {
            *a += c * b / (h * h);
        }
    }
    Ok(out.unwrap())
}

fn central(metric: &ChartMetric, x: &[f64], order: usize, h: f64) -> Result<MetricJet> {
    let n = x.len();
    let domain = metric.domain();
    let eval = |y: &[f64]| metric.eval_sym(y).as_slice().to_vec();
    let g = eval(x);
    let mut dg = vec![0.0; n * n * n];
    for k in 0..n {
        let d = diff1(&eval, domain, x, k, h)?;
        dg[k * n * n..(k + 1) * n * n].copy_from_slice(&d);
    }
    let ddg = if order >= 2 {
        // Second differences amplify rounding by 1/h^2; a wider step keeps
        // that below the truncation error.
        let h2 = 10.0 * h;
        let mut ddg = vec![0.0; n * n * n * n];
        for k in 0..n {
            let d = diff2_diag(&eval, domain, x, k, h2)?;
            ddg[(k * n + k) * n * n..(k * n + k + 1) * n * n].copy_from_slice(&d);
            for l in (k + 1)..n {
                let inner = |y: &[f64]| diff1(&eval, domain, y, l, h2).unwrap_or_else(|_| vec![f64::NAN; n * n]);
                // the inner stencil must fit at every outer sample
                stencil(domain, x, l, h2)?;
                let d = diff1(&inner, domain, x, k, h2)?;
                ddg[(k * n + l) * n * n..(k * n + l + 1) * n * n].copy_from_slice(&d);
                ddg[(l * n + k) * n * n..(l * n + k + 1) * n * n].copy_from_slice(&d);
            }
        }
        Some(ddg)
    } else {
        None
    };
    Ok(MetricJet { n, g, dg, ddg })
}
