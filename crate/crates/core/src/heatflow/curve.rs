//! Sampled closed curves in a 2-D target chart.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};

use crate::engine::chart::{check_positive_definite, ChartMetric};
use crate::engine::curvature::inner;
use crate::engine::jet::metric_jet;
use crate::error::{Error, Result};

/// Energy and tension of a curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveState {
    pub energy: f64,
    pub tension: Vec<Vec<f64>>,
    /// Largest `g`-norm of the tension.
    pub tension_max: f64,
}

pub const MIN_POINTS: usize = 16;
/// Largest allowed ratio of the biggest sample gap to the mean gap.
pub const MAX_GAP_RATIO: f64 = 10.0;

/// A closed curve `γ: S¹ → target` sampled at `θᵢ = 2πi/N`.
///
/// Samples are stored lifted: periodic coordinates are continuous along the
/// curve, and the sample after the last one is the first shifted by
/// `winding · period` on each periodic axis.
#[derive(Clone, Debug)]
pub struct ClosedCurve {
    samples: Vec<Vec<f64>>,
    winding: Vec<i64>,
    target: ChartMetric,
}

fn wrap(v: f64, lo: f64, p: f64) -> f64 {
    lo + (v - lo).rem_euclid(p)
}

impl ClosedCurve {
    /// Curve through lifted samples with the given winding per axis (0 on
    /// non-periodic axes).
    pub fn new(target: ChartMetric, samples: Vec<Vec<f64>>, winding: Vec<i64>) -> Result<Self> {
        let dim = target.dim();
        if samples.len() < MIN_POINTS {
            return Err(Error::InvalidCurve(format!(
                "{} samples, at least {MIN_POINTS} required",
                samples.len()
            )));
        }
        if winding.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: winding.len(),
            });
        }
        for (axis, (&w, a)) in winding.iter().zip(&target.domain().axes).enumerate() {
            if w != 0 && !a.periodic {
                return Err(Error::InvalidCurve(format!("non-zero winding on non-periodic axis {axis}")));
            }
        }
        for x in &samples {
            if x.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
            target.check_point(x)?;
        }
        let c = ClosedCurve {
            samples,
            winding,
            target,
        };
        c.check_gaps()?;
        let observed = c.measured_winding();
        if observed != c.winding {
            return Err(Error::InvalidCurve(format!(
                "declared winding {:?} but samples wind {:?}",
                c.winding, observed
            )));
        }
        Ok(c)
    }

    /// Samples `θ ↦ f(θ)` at `n` points; `f` must be the lift, so
    /// `f(θ + 2π) = f(θ) + winding · period`.
    pub fn from_fn(target: ChartMetric, n: usize, winding: Vec<i64>, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let samples = (0..n).map(|i| f(TAU * i as f64 / n as f64)).collect();
        Self::new(target, samples, winding)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn winding(&self) -> &[i64] {
        &self.winding
    }

    pub fn target(&self) -> &ChartMetric {
        &self.target
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.len() as f64
    }

    /// Lifted sample `i`, for any integer `i`.
    pub fn point(&self, i: isize) -> Vec<f64> {
        let n = self.len() as isize;
        let k = i.div_euclid(n);
        let mut x = self.samples[i.rem_euclid(n) as usize].clone();
        for (a, (axis, &w)) in self.target.domain().axes.iter().zip(&self.winding).enumerate() {
            if let Some(p) = axis.period() {
                x[a] += (k * w as isize) as f64 * p;
            }
        }
        x
    }

    /// `γᵢ₊₁ − γᵢ` in lifted coordinates.
    pub fn increment(&self, i: usize) -> Vec<f64> {
        let a = self.point(i as isize);
        let b = self.point(i as isize + 1);
        b.iter().zip(&a).map(|(b, a)| b - a).collect()
    }

    /// Winding recomputed from the wrapped samples by nearest-image
    /// unwrapping of every increment.
    pub fn measured_winding(&self) -> Vec<i64> {
        let axes = &self.target.domain().axes;
        let n = self.len();
        axes.iter()
            .enumerate()
            .map(|(a, axis)| match axis.period() {
                None => 0,
                Some(p) => {
                    let mut total = 0.0;
                    for i in 0..n {
                        let x0 = wrap(self.samples[i][a], axis.lo, p);
                        let x1 = wrap(self.samples[(i + 1) % n][a], axis.lo, p);
                        let d = x1 - x0;
                        total += d - p * (d / p).round();
                    }
                    (total / p).round() as i64
                }
            })
            .collect()
    }

    fn check_gaps(&self) -> Result<()> {
        let gaps: Vec<f64> = (0..self.len())
            .map(|i| self.increment(i).iter().map(|d| d * d).sum::<f64>().sqrt())
            .collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let max = gaps.iter().cloned().fold(0.0, f64::max);
        if !max.is_finite() || max > MAX_GAP_RATIO * mean && mean > 0.0 {
            return Err(Error::InvalidCurve(format!("max gap {max:e} exceeds {MAX_GAP_RATIO} x mean gap {mean:e}")));
        }
        Ok(())
    }

    /// Discrete Dirichlet energy with trapezoid-averaged metric on each segment:
    /// `½ Σ ½(g(γᵢ) + g(γᵢ₊₁))(Δγᵢ, Δγᵢ) / Δθ`.
    pub fn energy(&self) -> f64 {
        let n = self.len();
        let gs: Vec<_> = self.samples.iter().map(|x| self.target.eval(x)).collect();
        let mut e = 0.0;
        for i in 0..n {
            let d = self.increment(i);
            let (g0, g1) = (&gs[i], &gs[(i + 1) % n]);
            for a in 0..d.len() {
                for b in 0..d.len() {
                    e += 0.5 * (g0[(a, b)] + g1[(a, b)]) * d[a] * d[b];
                }
            }
        }
        0.5 * e / self.dtheta()
    }

    /// Tension field: minus the `g`-gradient of [`energy`](Self::energy) per
    /// unit parameter length. Consistent to second order with
    /// `γ″ + Γ(γ)(γ′, γ′)`, and exactly zero on discrete geodesics.
    pub fn tension(&self) -> Result<Vec<Vec<f64>>> {
        self.state().map(|s| s.tension)
    }

    /// Largest `g`-norm of a vector field along the curve.
    pub fn tension_norm(&self, tension: &[Vec<f64>]) -> f64 {
        self.samples
            .iter()
            .zip(tension)
            .map(|(x, t)| inner(&self.target.eval(x), t, t).sqrt())
            .fold(0.0, f64::max)
    }

    /// Energy, tension and its largest norm from one metric evaluation per sample.
    pub fn state(&self) -> Result<CurveState> {
        let n = self.len();
        let dim = self.dim();
        let h = self.dtheta();
        let jets = self
            .samples
            .iter()
            .map(|x| metric_jet(&self.target, x, 1))
            .collect::<Result<Vec<_>>>()?;
        let incs: Vec<Vec<f64>> = (0..n).map(|i| self.increment(i)).collect();
        let mut energy = 0.0;
        for i in 0..n {
            let (j0, j1, d) = (&jets[i], &jets[(i + 1) % n], &incs[i]);
            for a in 0..dim {
                for b in 0..dim {
                    energy += 0.5 * (j0.g(a, b) + j1.g(a, b)) * d[a] * d[b];
                }
            }
        }
        let mut tension = Vec::with_capacity(n);
        let mut tension_max = 0.0_f64;
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let (jm, j0, jp) = (&jets[prev], &jets[i], &jets[(i + 1) % n]);
            let (dm, d0) = (&incs[prev], &incs[i]);
            let mut grad = vec![0.0; dim];
            for (k, gk) in grad.iter_mut().enumerate() {
                let mut quad = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        quad += j0.dg(k, a, b) * (d0[a] * d0[b] + dm[a] * dm[b]);
                    }
                }
                let mut lin = 0.0;
                for a in 0..dim {
                    lin += (jm.g(k, a) + j0.g(k, a)) * dm[a] - (j0.g(k, a) + jp.g(k, a)) * d0[a];
                }
                *gk = (0.25 * quad + 0.5 * lin) / h;
            }
            let g = DMatrix::from_row_slice(dim, dim, &j0.g);
            let chol = check_positive_definite(&g, &self.samples[i])?;
            let v: Vec<f64> = chol.solve(&DVector::from_vec(grad)).iter().map(|c| -c / h).collect();
            tension_max = tension_max.max(inner(&g, &v, &v).sqrt());
            tension.push(v);
        }
        Ok(CurveState {
            energy: 0.5 * energy / h,
            tension,
            tension_max,
        })
    }

    /// Same curve with samples moved by `dt · field`.
    pub(crate) fn displaced(&self, field: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .zip(field)
            .map(|(x, v)| x.iter().zip(v).map(|(x, v)| x + dt * v).collect())
            .collect()
    }

    pub(crate) fn with_samples(&self, samples: Vec<Vec<f64>>) -> Self {
        ClosedCurve {
            samples,
            winding: self.winding.clone(),
            target: self.target.clone(),
        }
    }
}
