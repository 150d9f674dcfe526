//! Closed-form sectional curvature of singly and doubly warped products.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::warp::function::WarpFunction;

/// Constraint residuals above this are errors; below it the frame is
/// re-orthonormalised.
pub const FRAME_TOLERANCE: f64 = 1e-10;

/// Pair weights below this are treated as a degenerate factor pair.
const DEGENERATE_PAIR: f64 = 1e-14;

fn ip(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a.transpose() * g * b)[(0, 0)]
}

/// Orthonormal basis `{u₁ + v₁ + s∂, u₂ + v₂}` of a 2-plane in
/// `T M₁ ⊕ T M₂ ⊕ ℝ`.
///
/// `g1` and `g2` are the inner products of the warped metric on the two
/// factor blocks, i.e. `φ₁²σ₁` and `φ₂²σ₂` at the base point. `k1`/`k2` are
/// the factor sectional curvatures of span(u₁,u₂) and span(v₁,v₂); they are
/// never read when the pair is degenerate.
#[derive(Clone, Debug)]
pub struct DoublyWarpedFrame {
    pub u1: DVector<f64>,
    pub u2: DVector<f64>,
    pub v1: DVector<f64>,
    pub v2: DVector<f64>,
    pub s: f64,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
    pub k1: f64,
    pub k2: f64,
}

/// The three frame constraints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameResiduals {
    pub first_unit: f64,
    pub second_unit: f64,
    pub orthogonal: f64,
}

impl FrameResiduals {
    pub fn max(&self) -> f64 {
        self.first_unit.max(self.second_unit).max(self.orthogonal)
    }
}

impl DoublyWarpedFrame {
    /// Validates the constraints and re-orthonormalises: `b` is normalised
    /// first, then `a` is made orthogonal to it and normalised.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        u1: DVector<f64>,
        v1: DVector<f64>,
        s: f64,
        u2: DVector<f64>,
        v2: DVector<f64>,
        g1: DMatrix<f64>,
        g2: DMatrix<f64>,
        k1: f64,
        k2: f64,
    ) -> Result<Self> {
        let mut f = DoublyWarpedFrame {
            u1,
            u2,
            v1,
            v2,
            s,
            g1,
            g2,
            k1,
            k2,
        };
        let res = f.residuals().max();
        if !(res <= FRAME_TOLERANCE) {
            return Err(Error::FrameNotOrthonormal { residual: res });
        }
        f.reorthonormalize();
        Ok(f)
    }

    /// Builds a frame without checking the constraints.
    #[allow(clippy::too_many_arguments)]
    pub fn unchecked(
        u1: DVector<f64>,
        v1: DVector<f64>,
        s: f64,
        u2: DVector<f64>,
        v2: DVector<f64>,
        g1: DMatrix<f64>,
        g2: DMatrix<f64>,
        k1: f64,
        k2: f64,
    ) -> Self {
        DoublyWarpedFrame {
            u1,
            u2,
            v1,
            v2,
            s,
            g1,
            g2,
            k1,
            k2,
        }
    }

    pub fn dim1(&self) -> usize {
        self.u1.len()
    }

    pub fn dim2(&self) -> usize {
        self.v1.len()
    }

    pub fn residuals(&self) -> FrameResiduals {
        let n_a = self.s * self.s + ip(&self.g1, &self.u1, &self.u1) + ip(&self.g2, &self.v1, &self.v1);
        let n_b = ip(&self.g1, &self.u2, &self.u2) + ip(&self.g2, &self.v2, &self.v2);
        let ab = ip(&self.g1, &self.u1, &self.u2) + ip(&self.g2, &self.v1, &self.v2);
        FrameResiduals {
            first_unit: (n_a - 1.0).abs(),
            second_unit: (n_b - 1.0).abs(),
            orthogonal: ab.abs(),
        }
    }

    fn reorthonormalize(&mut self) {
        let nb = (ip(&self.g1, &self.u2, &self.u2) + ip(&self.g2, &self.v2, &self.v2)).sqrt();
        self.u2 /= nb;
        self.v2 /= nb;
        let ab = ip(&self.g1, &self.u1, &self.u2) + ip(&self.g2, &self.v1, &self.v2);
        self.u1 -= &self.u2 * ab;
        self.v1 -= &self.v2 * ab;
        let na = (self.s * self.s + ip(&self.g1, &self.u1, &self.u1) + ip(&self.g2, &self.v1, &self.v1)).sqrt();
        self.u1 /= na;
        self.v1 /= na;
        self.s /= na;
    }
}

/// The five convex weights, in the order of [`curvature_terms`].
pub fn convex_weights(frame: &DoublyWarpedFrame) -> [f64; 5] {
    let (g1, g2) = (&frame.g1, &frame.g2);
    let (u1, u2, v1, v2) = (&frame.u1, &frame.u2, &frame.v1, &frame.v2);
    let nu1 = ip(g1, u1, u1);
    let nu2 = ip(g1, u2, u2);
    let nv1 = ip(g2, v1, v1);
    let nv2 = ip(g2, v2, v2);
    let uu = ip(g1, u1, u2);
    let vv = ip(g2, v1, v2);
    let s2 = frame.s * frame.s;
    let w_uu = if frame.dim1() < 2 { 0.0 } else { nu1 * nu2 - uu * uu };
    let w_vv = if frame.dim2() < 2 { 0.0 } else { nv1 * nv2 - vv * vv };
    [
        s2 * nu2,
        s2 * nv2,
        w_uu,
        w_vv,
        nu1 * nv2 + nv1 * nu2 - 2.0 * uu * vv,
    ]
}

/// `(−φ₁″/φ₁, −φ₂″/φ₂, (K₁−φ₁′²)/φ₁², (K₂−φ₂′²)/φ₂², −φ₁′φ₂′/(φ₁φ₂))`
pub fn curvature_terms(j1: [f64; 3], j2: [f64; 3], k1: f64, k2: f64) -> [f64; 5] {
    let [p1, d1, dd1] = j1;
    let [p2, d2, dd2] = j2;
    [
        -dd1 / p1,
        -dd2 / p2,
        (k1 - d1 * d1) / (p1 * p1),
        (k2 - d2 * d2) / (p2 * p2),
        -d1 * d2 / (p1 * p2),
    ]
}

fn check_warp(phi: &WarpFunction, t: f64) -> Result<[f64; 3]> {
    let j = phi.jet(t);
    if !(j[0] > 0.0) {
        return Err(Error::NonPositiveWarp {
            name: phi.name().to_string(),
            t,
            value: j[0],
        });
    }
    Ok(j)
}

/// Sectional curvature of `φ₁²σ₁ + φ₂²σ₂ + dt²` on the plane spanned by the frame.
#[allow(non_snake_case)]
pub fn doubly_warped_K(phi1: &WarpFunction, phi2: &WarpFunction, t: f64, frame: &DoublyWarpedFrame) -> Result<f64> {
    let res = frame.residuals().max();
    if !(res <= FRAME_TOLERANCE) {
        return Err(Error::FrameNotOrthonormal { residual: res });
    }
    let j1 = check_warp(phi1, t)?;
    let j2 = check_warp(phi2, t)?;
    Ok(combine(&convex_weights(frame), &curvature_terms(j1, j2, frame.k1, frame.k2)))
}

/// `Σ wᵢ termᵢ`, skipping degenerate factor pairs so an unread `Kᵢ` (NaN) never leaks in.
pub fn combine(weights: &[f64; 5], terms: &[f64; 5]) -> f64 {
    let mut k = 0.0;
    for i in 0..5 {
        if (i == 2 || i == 3) && weights[i].abs() <= DEGENERATE_PAIR {
            continue;
        }
        k += weights[i] * terms[i];
    }
    k
}

/// Single warped product `φ²σ + dt²` on the plane with orthonormal basis
/// `{u + s∂, v}`; `g` is the warped inner product `φ²σ` on the factor.
#[allow(non_snake_case)]
pub fn single_warp_K(
    phi: &WarpFunction,
    t: f64,
    s: f64,
    u: &DVector<f64>,
    v: &DVector<f64>,
    g: &DMatrix<f64>,
    k_sigma: f64,
) -> Result<f64> {
    let nu = ip(g, u, u);
    let res = (s * s + nu - 1.0)
        .abs()
        .max((ip(g, v, v) - 1.0).abs())
        .max(ip(g, u, v).abs());
    if !(res <= FRAME_TOLERANCE) {
        return Err(Error::FrameNotOrthonormal { residual: res });
    }
    let [p, d, dd] = check_warp(phi, t)?;
    let dim1 = u.len() < 2 || nu <= DEGENERATE_PAIR;
    let factor = if dim1 { 0.0 } else { (k_sigma - d * d) / (p * p) * nu };
    Ok(-dd / p * s * s + factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_frame(rng: &mut ChaCha8Rng, n1: usize, n2: usize, g1: DMatrix<f64>, g2: DMatrix<f64>) -> DoublyWarpedFrame {
        // random plane in T M1 ⊕ T M2 ⊕ ℝ, orthonormalised with b free of ∂
        let mut r = |n: usize| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let (au, av, at) = (r(n1), r(n2), r(1)[0]);
        let (bu, bv, bt) = (r(n1), r(n2), r(1)[0]);
        let (u2, v2) = (au.clone() * bt - bu * at, av.clone() * bt - bv * at);
        let f = DoublyWarpedFrame::unchecked(au, av, at, u2, v2, g1, g2, -1.0, -1.0);
        let mut f = f;
        f.reorthonormalize();
        f
    }

    #[test]
    fn weights_of_pure_planes() {
        let g1 = DMatrix::identity(2, 2);
        let g2 = DMatrix::identity(1, 1);
        let z1 = DVector::zeros(2);
        let z2 = DVector::zeros(1);
        let f = DoublyWarpedFrame::new(
            z1.clone(),
            z2.clone(),
            1.0,
            DVector::from_vec(vec![1.0, 0.0]),
            z2.clone(),
            g1.clone(),
            g2.clone(),
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(convex_weights(&f), [1.0, 0.0, 0.0, 0.0, 0.0]);
        let f = DoublyWarpedFrame::new(
            DVector::from_vec(vec![1.0, 0.0]),
            z2.clone(),
            0.0,
            DVector::from_vec(vec![0.0, 1.0]),
            z2,
            g1,
            g2,
            0.0,
            0.0,
        )
        .unwrap();
        assert_eq!(convex_weights(&f), [0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn weights_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let g1 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
            let g2 = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0]));
            let f = random_frame(&mut rng, 2, 1, g1, g2);
            let w = convex_weights(&f);
            assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
            assert!(w.iter().all(|&x| x >= -1e-12));
            assert_eq!(w[3], 0.0);
        }
    }

    #[test]
    fn exp_warp_over_flat_factor_is_minus_one() {
        let g = DMatrix::identity(2, 2);
        let u = DVector::from_vec(vec![0.8, 0.0]);
        let v = DVector::from_vec(vec![0.0, 1.0]);
        let k = single_warp_K(&WarpFunction::exp(), 0.0, 0.6, &u, &v, &g, 0.0).unwrap();
        assert!((k + 1.0).abs() < 1e-15);
        let k = single_warp_K(&WarpFunction::constant(1.0), 0.3, 0.0, &DVector::from_vec(vec![1.0, 0.0]), &v, &g, 0.7).unwrap();
        assert!((k - 0.7).abs() < 1e-15);
    }

    #[test]
    fn frame_violation_is_rejected() {
        let g1 = DMatrix::identity(1, 1);
        let z = DVector::zeros(1);
        let err = DoublyWarpedFrame::new(z.clone(), z.clone(), 1.0, DVector::from_vec(vec![1.1]), z, g1.clone(), g1, 0.0, 0.0)
            .unwrap_err();
        assert!(matches!(err, Error::FrameNotOrthonormal { .. }));
    }

    #[test]
    fn hyperbolic_tube_is_minus_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..200 {
            let t = 0.1 + 0.02 * i as f64;
            let g1 = DMatrix::identity(2, 2) * t.cosh().powi(2);
            let g2 = DMatrix::identity(1, 1) * t.sinh().powi(2);
            let mut f = random_frame(&mut rng, 2, 1, g1, g2);
            f.k1 = -1.0;
            f.k2 = f64::NAN;
            let k = doubly_warped_K(&WarpFunction::cosh(), &WarpFunction::sinh(), t, &f).unwrap();
            assert!((k + 1.0).abs() < 1e-12, "{k}");
        }
    }

    #[test]
    fn doubly_reduces_to_single() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let g1 = DMatrix::identity(2, 2) * 4.0;
            let g2 = DMatrix::identity(1, 1);
            let mut f = random_frame(&mut rng, 2, 1, g1.clone(), g2.clone());
            f.v1.fill(0.0);
            f.v2.fill(0.0);
            // v-free plane: rebuild the orthonormal basis inside T M1 ⊕ ℝ
            let f = {
                let mut g = DoublyWarpedFrame::unchecked(
                    f.u1.clone(), f.v1.clone(), f.s, f.u2.clone(), f.v2.clone(), g1.clone(), g2.clone(), 0.4, f64::NAN,
                );
                g.reorthonormalize();
                g
            };
            let phi = WarpFunction::sin_offset(2.0);
            let kd = doubly_warped_K(&phi, &WarpFunction::exp(), 0.9, &f).unwrap();
            let ks = single_warp_K(&phi, 0.9, f.s, &f.u1, &f.u2, &g1, 0.4).unwrap();
            assert!((kd - ks).abs() <= 1e-12);
        }
    }
}
