//! Generating terms of warped curvature and the α₀ threshold search.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::warp::function::WarpFunction;

type Profile = dyn Fn(f64) -> WarpFunction + Send + Sync;

/// Hypotheses of the pinching lemma, recorded with a family but not enforced
/// by the term checker.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    /// `φ′/φ → 1` and `φ″/φ → 1` uniformly on [a, b] as α → ∞.
    pub log_derivatives_tend_to_one: bool,
    /// `φ(αt, α) → ∞` uniformly on [a, b].
    pub diverges: bool,
}

/// `ρ_α = φ₁²(αt, α)σ₁ + φ₂²(αt, α)σ₂ + α²dt²` on `M₁ × M₂ × [a, b]`,
/// described through its warps and bounds on the factor curvatures.
///
/// A factor curvature bound of `None` marks a one-dimensional factor: its
/// K-term never enters a convex combination and is excluded.
#[derive(Clone)]
pub struct WarpFamily {
    pub name: String,
    phi1: Arc<Profile>,
    phi2: Arc<Profile>,
    pub t_interval: (f64, f64),
    pub k1_bounds: Option<(f64, f64)>,
    pub k2_bounds: Option<(f64, f64)>,
    pub hypotheses: Hypotheses,
}

impl std::fmt::Debug for WarpFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WarpFamily")
            .field("name", &self.name)
            .field("t_interval", &self.t_interval)
            .field("k1_bounds", &self.k1_bounds)
            .field("k2_bounds", &self.k2_bounds)
            .finish()
    }
}

fn check_bounds(name: &'static str, b: Option<(f64, f64)>) -> Result<Option<(f64, f64)>> {
    match b {
        Some((lo, hi)) if !(lo <= hi) => Err(Error::InvalidParameter {
            name,
            value: lo,
            reason: "lower curvature bound exceeds upper bound",
        }),
        other => Ok(other),
    }
}

impl WarpFamily {
    /// Family whose warps depend on α through `phi_i(α)`.
    pub fn new(
        name: impl Into<String>,
        phi1: impl Fn(f64) -> WarpFunction + Send + Sync + 'static,
        phi2: impl Fn(f64) -> WarpFunction + Send + Sync + 'static,
        t_interval: (f64, f64),
        k1_bounds: Option<(f64, f64)>,
        k2_bounds: Option<(f64, f64)>,
    ) -> Result<Self> {
        let (a, b) = t_interval;
        if !(a > 0.0 && a < b) {
            return Err(Error::InvalidParameter {
                name: "t_interval",
                value: a,
                reason: "need 0 < a < b",
            });
        }
        Ok(WarpFamily {
            name: name.into(),
            phi1: Arc::new(phi1),
            phi2: Arc::new(phi2),
            t_interval,
            k1_bounds: check_bounds("k1_bounds", k1_bounds)?,
            k2_bounds: check_bounds("k2_bounds", k2_bounds)?,
            hypotheses: Hypotheses::default(),
        })
    }

    /// Family with α-independent warps `φᵢ(τ, α) = φᵢ(τ)`.
    pub fn fixed(
        name: impl Into<String>,
        phi1: WarpFunction,
        phi2: WarpFunction,
        t_interval: (f64, f64),
        k1_bounds: Option<(f64, f64)>,
        k2_bounds: Option<(f64, f64)>,
    ) -> Result<Self> {
        Self::new(name, move |_| phi1.clone(), move |_| phi2.clone(), t_interval, k1_bounds, k2_bounds)
    }

    pub fn with_hypotheses(mut self, h: Hypotheses) -> Self {
        self.hypotheses = h;
        self
    }

    pub fn phi1(&self, alpha: f64) -> WarpFunction {
        (self.phi1)(alpha)
    }

    pub fn phi2(&self, alpha: f64) -> WarpFunction {
        (self.phi2)(alpha)
    }
}

/// One generating term; K-terms carry the values at both curvature bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermValue {
    pub lo: f64,
    pub hi: f64,
}

impl TermValue {
    fn exact(v: f64) -> Self {
        TermValue { lo: v, hi: v }
    }

    /// Largest distance from −1 over the range.
    pub fn deviation(&self) -> f64 {
        (self.lo + 1.0).abs().max((self.hi + 1.0).abs())
    }
}

/// The five terms at (α, t); `None` for an excluded K-term.
pub type Terms = [Option<TermValue>; 5];

pub const TERM_NAMES: [&str; 5] = ["-phi1''/phi1", "-phi2''/phi2", "(K1-phi1'^2)/phi1^2", "(K2-phi2'^2)/phi2^2", "-phi1'phi2'/(phi1 phi2)"];

/// Terms of `ρ_α` at chart time `t`, evaluated at the rescaled time `αt`.
pub fn generating_terms(family: &WarpFamily, alpha: f64, t: f64) -> Result<Terms> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
            reason: "must be positive",
        });
    }
    let tau = alpha * t;
    let f1 = family.phi1(alpha);
    let f2 = family.phi2(alpha);
    let j1 = f1.jet(tau);
    let j2 = f2.jet(tau);
    for (f, j) in [(&f1, j1), (&f2, j2)] {
        if !(j[0] > 0.0) {
            return Err(Error::NonPositiveWarp {
                name: f.name().to_string(),
                t: tau,
                value: j[0],
            });
        }
    }
    let [p1, d1, dd1] = j1;
    let [p2, d2, dd2] = j2;
    let k_term = |bounds: Option<(f64, f64)>, p: f64, d: f64| {
        bounds.map(|(lo, hi)| {
            let a = (lo - d * d) / (p * p);
            let b = (hi - d * d) / (p * p);
            TermValue { lo: a.min(b), hi: a.max(b) }
        })
    };
    Ok([
        Some(TermValue::exact(-dd1 / p1)),
        Some(TermValue::exact(-dd2 / p2)),
        k_term(family.k1_bounds, p1, d1),
        k_term(family.k2_bounds, p2, d2),
        Some(TermValue::exact(-d1 * d2 / (p1 * p2))),
    ])
}

/// `[min, max]` over the present terms.
pub fn term_bracket(terms: &Terms) -> (f64, f64) {
    terms.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.lo), hi.max(v.hi)))
}

/// `n` evenly spaced points covering `[a, b]` including both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// `start, start·ratio, …` (`count` values).
pub fn geometric_grid(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start * ratio.powi(i as i32)).collect()
}

/// `start, start + step, …` computed as `start + i·step` to avoid drift.
pub fn arithmetic_grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    /// Max over sampled t and terms of |term + 1|.
    pub max_deviation: f64,
    pub witness_term: usize,
    pub witness_t: f64,
    pub inside: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alpha0Report {
    pub family: String,
    pub epsilon: f64,
    pub t_samples: usize,
    pub alpha0: Option<f64>,
    /// Worst term at the largest grid α that fails, when no α₀ exists.
    pub witness: Option<AlphaRow>,
    pub rows: Vec<AlphaRow>,
}

/// Default number of t samples on [a, b].
pub const T_SAMPLES: usize = 256;

/// Smallest grid α from which on every term stays in (−1−ε, −1+ε) at all
/// sampled t.
pub fn find_alpha0(family: &WarpFamily, epsilon: f64, alpha_grid: &[f64], t_samples: usize) -> Result<Alpha0Report> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            reason: "must be positive",
        });
    }
    if alpha_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter {
            name: "alpha_grid",
            value: f64::NAN,
            reason: "grid must be strictly increasing",
        });
    }
    let ts = linspace(family.t_interval.0, family.t_interval.1, t_samples.max(2));
    let mut rows = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let mut worst = AlphaRow {
            alpha,
            max_deviation: 0.0,
            witness_term: 0,
            witness_t: ts[0],
            inside: true,
        };
        for &t in &ts {
            let terms = generating_terms(family, alpha, t)?;
            for (i, v) in terms.iter().enumerate() {
                if let Some(v) = v {
                    let d = v.deviation();
                    if d > worst.max_deviation || d.is_nan() {
                        worst.max_deviation = d;
                        worst.witness_term = i;
                        worst.witness_t = t;
                    }
                }
            }
        }
        worst.inside = worst.max_deviation < epsilon;
        rows.push(worst);
    }
    // first index from which every row is inside
    let mut first = rows.len();
    for i in (0..rows.len()).rev() {
        if rows[i].inside {
            first = i;
        } else {
            break;
        }
    }
    let alpha0 = rows.get(first).map(|r| r.alpha);
    let witness = if first == 0 { None } else { Some(rows[first - 1].clone()) };
    Ok(Alpha0Report {
        family: family.name.clone(),
        epsilon,
        t_samples: ts.len(),
        alpha0,
        witness,
        rows,
    })
}
