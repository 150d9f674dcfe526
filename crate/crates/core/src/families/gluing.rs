//! Twists of the `N × S¹` factor used to glue the cut tube back together.
//!
//! Every model twist has the form `F(x, u) = (x, u + θ(x))`: it preserves the
//! `N` coordinates and rotates the circle by an amount depending on `x`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual::Real;
use crate::error::{Error, Result};
use crate::families::step::SmoothStep;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GluingMap {
    Identity,
    /// Rigid rotation of the circle.
    Rotation { angle: f64 },
    /// Rotation by `angle · B(|x−c|²/R²)`, `B(z) = exp(1 − 1/(1−z))` for
    /// `z < 1`, zero outside: identity off the ball of radius R about c.
    LocalRotation { angle: f64, center: Vec<f64>, radius: f64 },
}

/// Where a gluing map differs from the identity.
#[derive(Clone, Debug, PartialEq)]
pub enum Support {
    Empty,
    Everywhere,
    Ball { center: Vec<f64>, radius: f64 },
}

impl GluingMap {
    pub fn validate(&self, n_dim: usize) -> Result<()> {
        match self {
            GluingMap::Identity => Ok(()),
            GluingMap::Rotation { angle } => finite("angle", *angle),
            GluingMap::LocalRotation { angle, center, radius } => {
                finite("angle", *angle)?;
                if center.len() != n_dim {
                    return Err(Error::DimensionMismatch {
                        expected: n_dim,
                        found: center.len(),
                    });
                }
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "radius",
                        value: *radius,
                        reason: "must be positive",
                    });
                }
                Ok(())
            }
        }
    }

    pub fn support(&self) -> Support {
        match self {
            GluingMap::Identity => Support::Empty,
            GluingMap::Rotation { angle } if *angle == 0.0 => Support::Empty,
            GluingMap::Rotation { .. } => Support::Everywhere,
            GluingMap::LocalRotation { angle, .. } if *angle == 0.0 => Support::Empty,
            GluingMap::LocalRotation { center, radius, .. } => Support::Ball {
                center: center.clone(),
                radius: *radius,
            },
        }
    }

    pub fn is_identity(&self) -> bool {
        self.support() == Support::Empty
    }

    /// Same twist with its angle multiplied by `k`.
    pub fn scaled(&self, k: f64) -> GluingMap {
        match self {
            GluingMap::Identity => GluingMap::Identity,
            GluingMap::Rotation { angle } => GluingMap::Rotation { angle: angle * k },
            GluingMap::LocalRotation { angle, center, radius } => GluingMap::LocalRotation {
                angle: angle * k,
                center: center.clone(),
                radius: *radius,
            },
        }
    }

    /// The rotation amount θ(x).
    pub fn theta<S: Real>(&self, x: &[S]) -> S {
        match self {
            GluingMap::Identity => S::cst(0.0),
            GluingMap::Rotation { angle } => S::cst(*angle),
            GluingMap::LocalRotation { angle, center, radius } => {
                let z = ball_coordinate(x, center, *radius);
                if z.re() >= 1.0 {
                    return S::cst(0.0);
                }
                local_bump(z) * *angle
            }
        }
    }

    /// `∂θ/∂xᵢ`
    pub fn theta_gradient<S: Real>(&self, x: &[S]) -> Vec<S> {
        match self {
            GluingMap::Identity | GluingMap::Rotation { .. } => vec![S::cst(0.0); x.len()],
            GluingMap::LocalRotation { angle, center, radius } => {
                let z = ball_coordinate(x, center, *radius);
                if z.re() >= 1.0 {
                    return vec![S::cst(0.0); x.len()];
                }
                // B'(z) = -w² B(z), w = 1/(1-z)
                let w = (S::cst(1.0) - z).recip();
                let db = -(w * w) * local_bump(z);
                let r2 = radius * radius;
                x.iter()
                    .zip(center)
                    .map(|(&xi, &ci)| db * (xi - ci) * (2.0 * angle / r2))
                    .collect()
            }
        }
    }

    /// `F(x, u) = (x, u + θ(x))`; `q = (x…, u)`.
    pub fn forward(&self, q: &[f64]) -> Vec<f64> {
        let n = q.len() - 1;
        let mut out = q.to_vec();
        out[n] += self.theta(&q[..n]);
        out
    }

    pub fn inverse(&self, q: &[f64]) -> Vec<f64> {
        let n = q.len() - 1;
        let mut out = q.to_vec();
        out[n] -= self.theta(&q[..n]);
        out
    }

    /// Jacobian of `F` at `q`: identity plus the row `∇θ` in the `u` slot.
    pub fn jacobian(&self, q: &[f64]) -> DMatrix<f64> {
        let n = q.len() - 1;
        let mut j = DMatrix::identity(n + 1, n + 1);
        for (i, g) in self.theta_gradient(&q[..n]).into_iter().enumerate() {
            j[(n, i)] = g;
        }
        j
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be finite",
        })
    }
}

fn ball_coordinate<S: Real>(x: &[S], center: &[f64], radius: f64) -> S {
    let mut z = S::cst(0.0);
    for (&xi, &ci) in x.iter().zip(center) {
        let d = xi - ci;
        z = z + d * d;
    }
    z / (radius * radius)
}

fn local_bump<S: Real>(z: S) -> S {
    (S::cst(1.0) - (S::cst(1.0) - z).recip()).exp()
}

/// A path of gluing maps `s ↦ f_s` on [0, 1/2] ending at the identity.
pub trait Isotopy: Send + Sync {
    fn at(&self, s: f64) -> GluingMap;
}

/// `f_s = base` with its angle scaled by a plateaued ramp from 1 (near 0)
/// to 0 (near 1/2).
#[derive(Clone, Debug, PartialEq)]
pub struct TwistIsotopy {
    pub base: GluingMap,
    ramp: SmoothStep,
}

impl TwistIsotopy {
    pub fn new(base: GluingMap) -> Self {
        TwistIsotopy {
            base,
            ramp: SmoothStep::new(0.0, 0.5, 1.0, 0.0, 0.1).expect("fixed ramp parameters are valid"),
        }
    }
}

impl Isotopy for TwistIsotopy {
    fn at(&self, s: f64) -> GluingMap {
        let k = self.ramp.value(s);
        if k == 0.0 {
            GluingMap::Identity
        } else {
            self.base.scaled(k)
        }
    }
}

/// Checks that an isotopy ends at the identity and is constant near both ends.
pub fn check_isotopy(iso: &dyn Isotopy) -> Result<()> {
    if !iso.at(0.5).is_identity() {
        return Err(Error::IsotopyEndpoint("f at s = 1/2 is not the identity"));
    }
    if iso.at(0.01) != iso.at(0.0) {
        return Err(Error::IsotopyEndpoint("isotopy is not constant near s = 0"));
    }
    if !iso.at(0.49).is_identity() {
        return Err(Error::IsotopyEndpoint("isotopy is not constant near s = 1/2"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{D1, D2};

    fn twist() -> GluingMap {
        GluingMap::LocalRotation {
            angle: 1.3,
            center: vec![3.0, 0.2],
            radius: 0.8,
        }
    }

    #[test]
    fn inverse_round_trip() {
        let f = twist();
        for q in [[3.1, 0.4, 1.0], [2.7, 0.0, 5.5], [0.0, 0.0, 2.0]] {
            let back = f.inverse(&f.forward(&q));
            for (a, b) in back.iter().zip(q) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_differences() {
        let f = twist();
        let q = [3.3, 0.5, 1.0];
        let j = f.jacobian(&q);
        let h = 1e-6;
        for c in 0..3 {
            let mut qp = q;
            let mut qm = q;
            qp[c] += h;
            qm[c] -= h;
            let (fp, fm) = (f.forward(&qp), f.forward(&qm));
            for r in 0..3 {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                assert!((j[(r, c)] - fd).abs() < 1e-6, "({r},{c})");
            }
        }
    }

    #[test]
    fn gradient_is_exact_in_forward_mode() {
        let f = twist();
        let x = [3.2, 0.6];
        let g = f.theta_gradient(&x);
        for i in 0..2 {
            let xd: Vec<D1> = (0..2).map(|k| D1::seed(x[k], k == i)).collect();
            assert!((f.theta(&xd).du - g[i]).abs() < 1e-14);
        }
        // second derivatives of θ flow through the gradient under nesting
        let xd: Vec<D2> = (0..2).map(|k| D2::seed(x[k], k == 0, k == 0)).collect();
        let gd = f.theta_gradient(&xd);
        let (_, d, _, _) = gd[0].parts();
        let h = 1e-6;
        let fd = (f.theta_gradient(&[x[0] + h, x[1]])[0] - f.theta_gradient(&[x[0] - h, x[1]])[0]) / (2.0 * h);
        assert!((d - fd).abs() < 1e-6);
    }

    #[test]
    fn identity_outside_support() {
        let f = twist();
        assert_eq!(f.forward(&[0.0, 0.0, 1.0]), vec![0.0, 0.0, 1.0]);
        assert_eq!(f.jacobian(&[0.0, 0.0, 1.0]), DMatrix::identity(3, 3));
    }

    #[test]
    fn isotopy_endpoints() {
        let iso = TwistIsotopy::new(twist());
        assert_eq!(iso.at(0.0), twist());
        assert!(iso.at(0.5).is_identity());
        check_isotopy(&iso).unwrap();
        struct Stuck;
        impl Isotopy for Stuck {
            fn at(&self, _s: f64) -> GluingMap {
                GluingMap::Rotation { angle: 1.0 }
            }
        }
        assert!(matches!(check_isotopy(&Stuck), Err(Error::IsotopyEndpoint(_))));
    }
}
