use std::fmt;
use std::sync::Arc;

use crate::dual::Real;
use crate::error::{Error, Result};

type JetFn = dyn Fn(f64) -> [f64; 3] + Send + Sync;

/// A positive warping profile `t ↦ φ(t)` given with its first two derivatives.
#[derive(Clone)]
pub struct WarpFunction {
    name: Arc<str>,
    jet: Arc<JetFn>,
}

impl fmt::Debug for WarpFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WarpFunction({})", self.name)
    }
}

impl WarpFunction {
    /// `jet(t)` must return `[φ(t), φ′(t), φ″(t)]`.
    pub fn new(name: impl Into<String>, jet: impl Fn(f64) -> [f64; 3] + Send + Sync + 'static) -> Self {
        WarpFunction {
            name: name.into().into(),
            jet: Arc::new(jet),
        }
    }

    pub fn exp() -> Self {
        Self::new("exp", |t| {
            let e = t.exp();
            [e, e, e]
        })
    }

    pub fn cosh() -> Self {
        Self::new("cosh", |t| [t.cosh(), t.sinh(), t.cosh()])
    }

    /// Positive only for `t > 0`.
    pub fn sinh() -> Self {
        Self::new("sinh", |t| [t.sinh(), t.cosh(), t.sinh()])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_| [c, 0.0, 0.0])
    }

    /// `offset + sin t`
    pub fn sin_offset(offset: f64) -> Self {
        Self::new(format!("{offset}+sin"), move |t| {
            [offset + t.sin(), t.cos(), -t.sin()]
        })
    }

    /// `(e^t + c e^{-t}) / 2`; `c = 1` is cosh, `c = -1` is sinh.
    pub fn exp_combination(c: f64) -> Self {
        Self::new(format!("exp_combination({c})"), move |t| {
            let p = 0.5 * t.exp();
            let m = 0.5 * c * (-t).exp();
            [p + m, p - m, p + m]
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn jet(&self, t: f64) -> [f64; 3] {
        (self.jet)(t)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.jet(t)[0]
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.jet(t)[1]
    }

    pub fn d2(&self, t: f64) -> f64 {
        self.jet(t)[2]
    }

    /// Evaluates φ on a (possibly dual) scalar.
    pub fn lift<S: Real>(&self, t: S) -> S {
        t.lift(&|x, k| {
            assert!(k <= 2, "warp functions carry two derivatives");
            self.jet(x)[k]
        })
    }

    /// `t ↦ φ(αt)`
    pub fn rescaled(&self, alpha: f64) -> Self {
        let inner = self.clone();
        Self::new(format!("{}(α={alpha}·t)", self.name), move |t| {
            let [v, d1, d2] = inner.jet(alpha * t);
            [v, alpha * d1, alpha * alpha * d2]
        })
    }

    /// Max relative disagreement between the supplied derivatives and
    /// central differences of the value at the sample points.
    pub fn consistency_residual(&self, ts: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for &t in ts {
            let h = 1e-4 * t.abs().max(1.0);
            let [v, d1, d2] = self.jet(t);
            let vp = self.value(t + h);
            let vm = self.value(t - h);
            let fd1 = (vp - vm) / (2.0 * h);
            let fd2 = (vp - 2.0 * v + vm) / (h * h);
            worst = worst
                .max((d1 - fd1).abs() / d1.abs().max(v.abs()).max(1.0))
                .max((d2 - fd2).abs() / d2.abs().max(v.abs()).max(1.0));
        }
        worst
    }

    pub fn check_positive(&self, ts: &[f64]) -> Result<()> {
        for &t in ts {
            let v = self.value(t);
            if !(v > 0.0) {
                return Err(Error::NonPositiveWarp {
                    name: self.name.to_string(),
                    t,
                    value: v,
                });
            }
        }
        Ok(())
    }

    /// Positivity check on an evenly spaced grid over `[lo, hi]`.
    pub fn check_positive_on(&self, lo: f64, hi: f64, samples: usize) -> Result<()> {
        let n = samples.max(2);
        let ts: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        self.check_positive(&ts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{second_derivative, D2};

    #[test]
    fn builtin_jets_are_consistent() {
        let ts: Vec<f64> = (1..40).map(|i| i as f64 * 0.1).collect();
        for w in [
            WarpFunction::exp(),
            WarpFunction::cosh(),
            WarpFunction::sinh(),
            WarpFunction::constant(2.0),
            WarpFunction::sin_offset(2.0),
            WarpFunction::exp_combination(0.3),
            WarpFunction::cosh().rescaled(2.5),
        ] {
            assert!(w.consistency_residual(&ts) < 1e-6, "{}", w.name());
        }
    }

    #[test]
    fn lift_matches_jet() {
        let w = WarpFunction::sin_offset(2.0);
        let [v, d1, d2] = second_derivative(|t: D2| w.lift(t), 0.7);
        assert_eq!([v, d1, d2], w.jet(0.7));
    }

    #[test]
    fn sinh_fails_positivity_at_zero() {
        let err = WarpFunction::sinh().check_positive(&[0.5, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWarp { t, .. } if t == 0.0));
        assert!(WarpFunction::sinh().check_positive_on(0.1, 5.0, 50).is_ok());
    }
}
