//! Monotone transition profiles with exact constant plateaus.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::dual::Real;
use crate::error::{Error, Result};

const GL_ORDER: usize = 20;
const PANELS: f64 = 24.0;

/// Gauss–Legendre nodes and weights on [-1, 1].
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

/// `b(x) = exp(-1/(x(1-x)))` on (0, 1), zero outside.
fn bump(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        (-1.0 / (x * (1.0 - x))).exp()
    }
}

fn bump_d1(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        let q = x * (1.0 - x);
        bump(x) * (1.0 - 2.0 * x) / (q * q)
    }
}

fn integrate_bump(lo: f64, hi: f64) -> f64 {
    let (nodes, weights) = gauss_legendre();
    let panels = ((hi - lo) * PANELS).ceil().max(1.0) as usize;
    let h = (hi - lo) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * h;
        for (xi, wi) in nodes.iter().zip(weights) {
            sum += wi * bump(a + 0.5 * h * (xi + 1.0));
        }
    }
    0.5 * h * sum
}

fn bump_mass() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| integrate_bump(0.0, 1.0))
}

/// Normalised primitive `H(x) = ∫₀ˣ b / ∫₀¹ b`, with `H(x) = 1 − H(1−x)`
/// used above 1/2.
fn normalized_primitive(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else if x <= 0.5 {
        integrate_bump(0.0, x) / bump_mass()
    } else {
        1.0 - integrate_bump(0.0, 1.0 - x) / bump_mass()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepShape {
    /// Integrated bump: C^∞, every derivative vanishes on the plateaus.
    Bump,
    /// Piecewise linear: only continuous. Used to build non-smooth counterexamples.
    LinearRamp,
}

/// A monotone step from `y0` (for `t ≤ t0 + margin`) to `y1` (for `t ≥ t1 − margin`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothStep {
    pub t0: f64,
    pub t1: f64,
    pub y0: f64,
    pub y1: f64,
    pub margin: f64,
    pub shape: StepShape,
}

impl SmoothStep {
    pub fn new(t0: f64, t1: f64, y0: f64, y1: f64, margin: f64) -> Result<Self> {
        Self::with_shape(t0, t1, y0, y1, margin, StepShape::Bump)
    }

    pub fn with_shape(t0: f64, t1: f64, y0: f64, y1: f64, margin: f64, shape: StepShape) -> Result<Self> {
        if !(t0 < t1) {
            return Err(Error::InvalidParameter {
                name: "t1",
                value: t1,
                reason: "transition interval is empty",
            });
        }
        if !(margin >= 0.0 && 2.0 * margin < t1 - t0) {
            return Err(Error::InvalidParameter {
                name: "margin",
                value: margin,
                reason: "plateau margin must lie in [0, (t1 - t0)/2)",
            });
        }
        Ok(SmoothStep {
            t0,
            t1,
            y0,
            y1,
            margin,
            shape,
        })
    }

    fn ramp_interval(&self) -> (f64, f64) {
        (self.t0 + self.margin, self.t1 - self.margin)
    }

    /// `[value, d/dt, d²/dt²]`
    pub fn jet(&self, t: f64) -> [f64; 3] {
        let (a, b) = self.ramp_interval();
        if t <= a {
            return [self.y0, 0.0, 0.0];
        }
        if t >= b {
            return [self.y1, 0.0, 0.0];
        }
        let w = b - a;
        let x = (t - a) / w;
        let dy = self.y1 - self.y0;
        match self.shape {
            StepShape::Bump => {
                let z = bump_mass();
                [
                    self.y0 + dy * normalized_primitive(x),
                    dy * bump(x) / (z * w),
                    dy * bump_d1(x) / (z * w * w),
                ]
            }
            StepShape::LinearRamp => [self.y0 + dy * x, dy / w, 0.0],
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.jet(t)[0]
    }

    pub fn lift<S: Real>(&self, t: S) -> S {
        t.lift(&|x, k| {
            assert!(k <= 2, "step profiles carry two derivatives");
            self.jet(x)[k]
        })
    }

    pub fn is_plateau(&self, t: f64) -> bool {
        let (a, b) = self.ramp_interval();
        t <= a || t >= b
    }
}

/// The three t-profiles of the twisted family and the s-profile η.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyProfiles {
    pub delta1: SmoothStep,
    pub delta2: SmoothStep,
    pub delta3: SmoothStep,
    pub eta: SmoothStep,
}

/// δ₁: −1 → 1 on [2,3]; δ₂: 0 → 1 on [3,4]; δ₃: 1 → −1 on [4,5].
pub fn delta_profiles(margin: f64) -> Result<(SmoothStep, SmoothStep, SmoothStep)> {
    if !(margin > 0.0 && margin < 0.5) {
        return Err(Error::InvalidParameter {
            name: "margin",
            value: margin,
            reason: "must lie in (0, 1/2)",
        });
    }
    delta_profiles_shaped(margin, StepShape::Bump)
}

/// Like [`delta_profiles`] but with any shape and margin in [0, 1/2).
pub fn delta_profiles_shaped(margin: f64, shape: StepShape) -> Result<(SmoothStep, SmoothStep, SmoothStep)> {
    Ok((
        SmoothStep::with_shape(2.0, 3.0, -1.0, 1.0, margin, shape)?,
        SmoothStep::with_shape(3.0, 4.0, 0.0, 1.0, margin, shape)?,
        SmoothStep::with_shape(4.0, 5.0, 1.0, -1.0, margin, shape)?,
    ))
}

/// η on [1/2, 1]: 1 → 0, with values in [0, 1].
pub fn eta_profile(margin: f64) -> Result<SmoothStep> {
    if !(margin > 0.0 && margin < 0.25) {
        return Err(Error::InvalidParameter {
            name: "margin",
            value: margin,
            reason: "must lie in (0, 1/4)",
        });
    }
    SmoothStep::new(0.5, 1.0, 1.0, 0.0, margin)
}

impl FamilyProfiles {
    /// Bump-shaped δ profiles with the given margin; η uses half of it.
    pub fn new(margin: f64) -> Result<Self> {
        let (delta1, delta2, delta3) = delta_profiles(margin)?;
        Ok(FamilyProfiles {
            delta1,
            delta2,
            delta3,
            eta: eta_profile(0.5 * margin)?,
        })
    }

    /// Profiles without the range checks, for counterexamples.
    pub fn shaped(margin: f64, shape: StepShape) -> Result<Self> {
        let (delta1, delta2, delta3) = delta_profiles_shaped(margin, shape)?;
        Ok(FamilyProfiles {
            delta1,
            delta2,
            delta3,
            eta: SmoothStep::with_shape(0.5, 1.0, 1.0, 0.0, 0.5 * margin, shape)?,
        })
    }
}
