//! The tube metric ρ_r, the twisted piecewise metric λ_r and the two-stage
//! family (λ_r)_s on charts `(x…, u, t)` with `x` in `N`, `u` on the circle
//! and `t ∈ [0, 6]`.

use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual::{Real, D2};
use crate::engine::chart::{Axis, ChartMetric, DomainBox, MetricExpr, MetricScalar, SymMat};
use crate::error::{Error, Result};
use crate::families::gluing::{check_isotopy, GluingMap, Isotopy};
use crate::families::step::FamilyProfiles;

/// Interfaces between consecutive branches.
pub const BREAKPOINTS: [f64; 4] = [2.0, 3.0, 4.0, 5.0];
/// t-range of the family charts.
pub const T_RANGE: (f64, f64) = (0.0, 6.0);

/// Tolerances of the breakpoint check per derivative order.
pub const SMOOTHNESS_TOLERANCE: [f64; 3] = [1e-8, 1e-8, 1e-6];

/// `(e^τ + c e^{−τ})/2`. Every branch goes through this one expression so
/// that families that coincide in exact arithmetic also coincide in floating
/// point.
fn cb<S: Real>(tau: S, c: S) -> S {
    (tau.exp() + (-tau).exp() * c) * 0.5
}

#[derive(Clone, Debug, PartialEq)]
pub enum Regime {
    /// The δ-table, with the branch on [3,4] twisted by a gluing map.
    Twisted { gluing: GluingMap },
    /// The η-table at a fixed value η(s).
    Eta { eta: f64 },
}

struct Inner {
    sigma_n: ChartMetric,
    alpha: f64,
    profiles: FamilyProfiles,
    regime: Regime,
}

impl Inner {
    fn n_dim(&self) -> usize {
        self.sigma_n.dim()
    }

    fn dim(&self) -> usize {
        self.n_dim() + 2
    }

    /// Branch formula `k` (0‥4) at chart point `x`, regardless of which
    /// interval `t` lies in.
    fn branch<S: MetricScalar>(&self, k: usize, x: &[S]) -> SymMat<S> {
        let nd = self.n_dim();
        let dim = nd + 2;
        let t = x[dim - 1];
        let tau = t * self.alpha;
        let one = S::cst(1.0);
        let cosh2 = cb(tau, one).square();
        let sigma: SymMat<S> = self.sigma_n.components(&x[..nd]);
        let mut m = SymMat::zeros(dim);
        m.set(dim - 1, dim - 1, S::cst(self.alpha * self.alpha));
        let circle = |c: S| cb(tau, c).square();
        let p = &self.profiles;
        let coeff = match (&self.regime, k) {
            (_, 0) | (_, 4) => Some(circle(-one)),
            (Regime::Twisted { .. }, 1) => Some(circle(p.delta1.lift(t))),
            (Regime::Twisted { .. }, 3) => Some(circle(p.delta3.lift(t))),
            (Regime::Eta { eta }, 1) => Some(circle((p.delta1.lift(t) + 1.0) * *eta - 1.0)),
            (Regime::Eta { eta }, 2) => Some(circle(S::cst(2.0 * eta - 1.0))),
            (Regime::Eta { eta }, 3) => Some(circle((p.delta3.lift(t) + 1.0) * *eta - 1.0)),
            (Regime::Twisted { .. }, 2) => None,
            _ => unreachable!("five branches"),
        };
        match coeff {
            Some(c) => {
                m.set_block(0, &sigma, cosh2);
                m.set(nd, nd, c);
            }
            None => {
                // cosh²{(1−δ₂) f*h + δ₂ h}, h = σ_N ⊕ du², f*h = h + dθ⊗du + du⊗dθ + dθ²
                let Regime::Twisted { gluing } = &self.regime else { unreachable!() };
                let d2 = p.delta2.lift(t);
                let w = one - d2;
                let grad = gluing.theta_gradient(&x[..nd]);
                for i in 0..nd {
                    for j in i..nd {
                        let v = sigma.get(i, j) + w * grad[i] * grad[j];
                        m.set(i, j, cosh2 * v);
                    }
                    m.set(i, nd, cosh2 * w * grad[i]);
                }
                m.set(nd, nd, cosh2);
            }
        }
        m
    }

    fn branch_index(t: f64) -> usize {
        BREAKPOINTS.iter().take_while(|&&b| t >= b).count()
    }
}

struct PiecewiseExpr(Arc<Inner>);

impl MetricExpr for PiecewiseExpr {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn components<S: MetricScalar>(&self, x: &[S]) -> SymMat<S> {
        let t = x[self.0.dim() - 1].re();
        self.0.branch(Inner::branch_index(t), x)
    }
}

struct BranchExpr(Arc<Inner>, usize);

impl MetricExpr for BranchExpr {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn components<S: MetricScalar>(&self, x: &[S]) -> SymMat<S> {
        self.0.branch(self.1, x)
    }
}

fn family_domain(sigma_n: &ChartMetric) -> DomainBox {
    let mut axes = sigma_n.domain().axes.clone();
    axes.push(Axis::periodic(0.0, TAU));
    axes.push(Axis::interval(T_RANGE.0, T_RANGE.1));
    DomainBox::new(axes)
}

/// A λ_r-type metric: five branch formulas on [0,2], [2,3], [3,4], [4,5],
/// [5,6], glued at t = 3 through the regime's gluing map.
#[derive(Clone)]
pub struct PiecewiseWarpMetric {
    inner: Arc<Inner>,
    pub r: f64,
    name: String,
}

impl std::fmt::Debug for PiecewiseWarpMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PiecewiseWarpMetric")
            .field("name", &self.name)
            .field("r", &self.r)
            .field("regime", &self.inner.regime)
            .finish()
    }
}

impl PiecewiseWarpMetric {
    fn new(name: String, r: f64, sigma_n: &ChartMetric, profiles: FamilyProfiles, regime: Regime) -> Result<Self> {
        check_r(r)?;
        if !sigma_n.forward_capable() {
            return Err(Error::ForwardModeUnavailable(sigma_n.name().to_string()));
        }
        if let Regime::Twisted { gluing } = &regime {
            gluing.validate(sigma_n.dim())?;
        }
        Ok(PiecewiseWarpMetric {
            inner: Arc::new(Inner {
                sigma_n: sigma_n.clone(),
                alpha: r / 6.0,
                profiles,
                regime,
            }),
            r,
            name,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn regime(&self) -> &Regime {
        &self.inner.regime
    }

    pub fn sigma_n(&self) -> &ChartMetric {
        &self.inner.sigma_n
    }

    pub fn profiles(&self) -> &FamilyProfiles {
        &self.inner.profiles
    }

    pub fn breakpoints(&self) -> &'static [f64] {
        &BREAKPOINTS
    }

    /// Single chart on `N × S¹ × [0,6]` evaluating the branch that owns `t`
    /// (half-open intervals, `t = 3` belongs to the twisted side).
    pub fn chart(&self) -> ChartMetric {
        ChartMetric::from_expr(self.name.clone(), PiecewiseExpr(self.inner.clone()), family_domain(&self.inner.sigma_n))
    }

    /// Branch `k` formula on the whole chart.
    pub fn branch_chart(&self, k: usize) -> ChartMetric {
        assert!(k < 5, "five branches");
        ChartMetric::from_expr(
            format!("{}[branch {k}]", self.name),
            BranchExpr(self.inner.clone(), k),
            family_domain(&self.inner.sigma_n),
        )
    }

    pub fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        self.chart().eval(x)
    }

    pub fn eval_branch(&self, k: usize, x: &[f64]) -> DMatrix<f64> {
        self.inner.branch::<f64>(k, x).to_matrix()
    }

    /// `[g, ∂_t g, ∂_t² g]` of branch `k`.
    fn branch_t_jet(&self, k: usize, x: &[f64]) -> [DMatrix<f64>; 3] {
        let dim = self.dim();
        let xd: Vec<D2> = (0..dim).map(|i| D2::seed(x[i], i == dim - 1, i == dim - 1)).collect();
        let m = self.inner.branch(k, &xd);
        let mut out = [DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim)];
        for i in 0..dim {
            for j in 0..dim {
                let (v, d, _, dd) = m.get(i, j).parts();
                out[0][(i, j)] = v;
                out[1][(i, j)] = d;
                out[2][(i, j)] = dd;
            }
        }
        out
    }
}

fn check_r(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "r",
            value: r,
            reason: "must be positive",
        })
    }
}

struct RhoExpr(Arc<Inner>);

impl MetricExpr for RhoExpr {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn components<S: MetricScalar>(&self, x: &[S]) -> SymMat<S> {
        self.0.branch(0, x)
    }
}

/// `cosh²(αt)σ_N + sinh²(αt)du² + α²dt²`, α = r/6, on `N × S¹ × [0,6]`.
pub fn build_rho_r(r: f64, sigma_n: &ChartMetric) -> Result<ChartMetric> {
    check_r(r)?;
    if !sigma_n.forward_capable() {
        return Err(Error::ForwardModeUnavailable(sigma_n.name().to_string()));
    }
    let inner = Inner {
        sigma_n: sigma_n.clone(),
        alpha: r / 6.0,
        profiles: FamilyProfiles::new(0.1)?,
        regime: Regime::Eta { eta: 0.0 },
    };
    Ok(ChartMetric::from_expr(
        format!("rho_r(r={r},{})", sigma_n.name()),
        RhoExpr(Arc::new(inner)),
        family_domain(sigma_n),
    ))
}

/// λ_r with twist `f` at t = 3; rejects families that are not C² across the
/// breakpoints.
pub fn build_lambda_r(r: f64, sigma_n: &ChartMetric, f: GluingMap, margin: f64) -> Result<PiecewiseWarpMetric> {
    let m = build_lambda_r_unchecked(r, sigma_n, f, FamilyProfiles::new(margin)?)?;
    require_smooth(&m)?;
    Ok(m)
}

/// λ_r from arbitrary profiles, without the smoothness check.
pub fn build_lambda_r_unchecked(
    r: f64,
    sigma_n: &ChartMetric,
    f: GluingMap,
    profiles: FamilyProfiles,
) -> Result<PiecewiseWarpMetric> {
    PiecewiseWarpMetric::new(
        format!("lambda_r(r={r},{})", sigma_n.name()),
        r,
        sigma_n,
        profiles,
        Regime::Twisted { gluing: f },
    )
}

/// (λ_r)_s: the δ-table twisted by `isotopy.at(s)` for s < 1/2 and the
/// η-table for s ≥ 1/2.
pub fn build_lambda_r_s(
    r: f64,
    s: f64,
    isotopy: &dyn Isotopy,
    sigma_n: &ChartMetric,
    margin: f64,
) -> Result<PiecewiseWarpMetric> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter {
            name: "s",
            value: s,
            reason: "must lie in [0, 1]",
        });
    }
    check_isotopy(isotopy)?;
    let profiles = FamilyProfiles::new(margin)?;
    let regime = if s < 0.5 {
        Regime::Twisted { gluing: isotopy.at(s) }
    } else {
        Regime::Eta {
            eta: profiles.eta.value(s),
        }
    };
    let m = PiecewiseWarpMetric::new(
        format!("lambda_r_s(r={r},s={s},{})", sigma_n.name()),
        r,
        sigma_n,
        profiles,
        regime,
    )?;
    require_smooth(&m)?;
    Ok(m)
}

fn require_smooth(m: &PiecewiseWarpMetric) -> Result<()> {
    let report = breakpoint_smoothness(m, 2);
    match report.breakpoints.iter().find(|b| !b.pass) {
        Some(b) => Err(Error::GluingIncompatible {
            breakpoint: b.t,
            mismatch: b.mismatch.iter().fold(0.0, |a: f64, &v| a.max(v)),
        }),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakpointCheck {
    pub t: f64,
    /// Relative component mismatch of value, ∂_t and ∂_t² across the interface.
    pub mismatch: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub order: usize,
    pub tolerances: Vec<f64>,
    pub breakpoints: Vec<BreakpointCheck>,
    pub pass: bool,
}

/// Factor points `(x…, u)` at which interfaces are compared: a fixed spread
/// over the factor domain plus the twist centre when there is one.
fn probe_points(m: &PiecewiseWarpMetric) -> Vec<Vec<f64>> {
    let axes = &m.sigma_n().domain().axes;
    let mut out = Vec::new();
    for k in 0..5 {
        let frac = (k as f64 + 0.5) / 5.0;
        let mut q: Vec<f64> = axes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let f = (frac + 0.37 * i as f64).fract();
                a.lo + (a.hi - a.lo) * (0.05 + 0.9 * f)
            })
            .collect();
        q.push(TAU * (0.1 + 0.17 * k as f64));
        out.push(q);
    }
    if let Regime::Twisted {
        gluing: GluingMap::LocalRotation { center, radius, .. },
    } = m.regime()
    {
        for off in [0.0, 0.3, 0.6] {
            let mut q = center.clone();
            q[0] += off * radius;
            q.push(1.0);
            out.push(q);
        }
    }
    out
}

/// Compares adjacent branch formulas at t = 2, 3, 4, 5 up to t-derivative
/// order `order` (0‥2). At t = 3 the left branch is pulled back through the
/// gluing map: `Jᵀ g_left(F(q), t) J` against `g_right(q, t)`.
pub fn breakpoint_smoothness(m: &PiecewiseWarpMetric, order: usize) -> SmoothnessReport {
    let order = order.min(2);
    let dim = m.dim();
    let probes = probe_points(m);
    let mut checks = Vec::new();
    for (k, &tb) in BREAKPOINTS.iter().enumerate() {
        let mut mismatch = [0.0_f64; 3];
        // one-sided limits: the adjacent floats on either side of tb
        let (t_left, t_right) = (tb.next_down(), tb.next_up());
        for q in &probes {
            let mut right_pt = q.clone();
            right_pt.push(t_right);
            let mut left_same = q.clone();
            left_same.push(t_left);
            let right = m.branch_t_jet(k + 1, &right_pt);
            let left = match (k, m.regime()) {
                (1, Regime::Twisted { gluing }) => {
                    let fq = gluing.forward(q);
                    let mut left_pt = fq;
                    left_pt.push(t_left);
                    let jq = gluing.jacobian(q);
                    let mut j = DMatrix::identity(dim, dim);
                    j.view_mut((0, 0), (dim - 1, dim - 1)).copy_from(&jq);
                    let raw = m.branch_t_jet(k, &left_pt);
                    [
                        j.transpose() * &raw[0] * &j,
                        j.transpose() * &raw[1] * &j,
                        j.transpose() * &raw[2] * &j,
                    ]
                }
                _ => m.branch_t_jet(k, &left_same),
            };
            for d in 0..=order {
                let scale = left[d].amax().max(1.0);
                let diff = (&left[d] - &right[d]).amax() / scale;
                let diff = if diff.is_nan() { f64::INFINITY } else { diff };
                mismatch[d] = mismatch[d].max(diff);
            }
        }
        let pass = (0..=order).all(|d| mismatch[d] <= SMOOTHNESS_TOLERANCE[d]);
        checks.push(BreakpointCheck {
            t: tb,
            mismatch: mismatch[..=order].to_vec(),
            pass,
        });
    }
    SmoothnessReport {
        order,
        tolerances: SMOOTHNESS_TOLERANCE[..=order].to_vec(),
        pass: checks.iter().all(|c| c.pass),
        breakpoints: checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::models;
    use crate::families::gluing::TwistIsotopy;
    use crate::families::step::StepShape;

    fn local_twist() -> GluingMap {
        GluingMap::LocalRotation {
            angle: 0.8,
            center: vec![3.0, 0.0],
            radius: 1.0,
        }
    }

    #[test]
    fn rho_r_is_a_rescaled_tube() {
        let n = models::hyperbolic_cylinder();
        let rho = build_rho_r(6.0, &n).unwrap();
        let rho12 = build_rho_r(12.0, &n).unwrap();
        let x = [0.7, 0.4, 2.0, 1.3];
        let g = rho.eval(&x);
        assert!((g[(0, 0)] - 1.3_f64.cosh().powi(2) * 0.4_f64.cosh().powi(2)).abs() < 1e-12);
        assert!((g[(2, 2)] - 1.3_f64.sinh().powi(2)).abs() < 1e-12);
        assert_eq!(g[(3, 3)], 1.0);
        // ρ_r at t equals ρ at αt, with dt² scaled by α²
        let g12 = rho12.eval(&x);
        let g6 = rho.eval(&[0.7, 0.4, 2.0, 2.6]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((g12[(i, j)] - g6[(i, j)]).abs() <= 1e-10 * g6[(i, j)].abs().max(1.0));
            }
        }
        assert_eq!(g12[(3, 3)], 4.0);
    }

    #[test]
    fn lambda_r_matches_rho_on_plateaus() {
        let n = models::flat_circle();
        let lam = build_lambda_r(12.0, &n, GluingMap::Identity, 0.1).unwrap();
        let rho = build_rho_r(12.0, &n).unwrap();
        for t in [1.9, 2.05, 5.0, 5.5] {
            let x = [0.3, 1.0, t];
            assert!((lam.eval(&x) - rho.eval(&x)).amax() <= 1e-10 * rho.eval(&x).amax());
        }
        // mid-transition circle coefficient sits between sinh² and cosh²
        let t = 2.5;
        let g = lam.eval(&[0.3, 1.0, t]);
        let tau = 2.0 * t;
        assert!(g[(1, 1)] > tau.sinh().powi(2) && g[(1, 1)] < tau.cosh().powi(2));
    }

    #[test]
    fn identity_and_twisted_families_are_smooth() {
        let n = models::hyperbolic_cylinder();
        for f in [GluingMap::Identity, GluingMap::Rotation { angle: 0.4 }, local_twist()] {
            let m = build_lambda_r(12.0, &n, f.clone(), 0.1).unwrap();
            let rep = breakpoint_smoothness(&m, 2);
            assert!(rep.pass, "{f:?}: {rep:?}");
        }
    }

    #[test]
    fn twisted_interface_is_a_pullback() {
        let n = models::hyperbolic_cylinder();
        let f = local_twist();
        let m = build_lambda_r(12.0, &n, f.clone(), 0.1).unwrap();
        let q = [3.2, 0.3, 1.0];
        let mut p3 = q.to_vec();
        p3.push(3.0);
        let mut fq = f.forward(&q);
        fq.push(3.0);
        let j3 = f.jacobian(&q);
        let mut j = DMatrix::identity(4, 4);
        j.view_mut((0, 0), (3, 3)).copy_from(&j3);
        let pulled = j.transpose() * m.eval_branch(1, &fq) * &j;
        let direct = m.eval_branch(2, &p3);
        assert!((pulled - &direct).amax() <= 1e-8 * direct.amax());
        // the twist is visible: off-diagonal (x, u) entries are non-zero
        assert!(direct[(0, 2)].abs() > 1e-3);
    }

    #[test]
    fn linear_ramp_breaks_first_order_smoothness() {
        let n = models::flat_circle();
        let profiles = FamilyProfiles::shaped(0.0, StepShape::LinearRamp).unwrap();
        let m = build_lambda_r_unchecked(12.0, &n, GluingMap::Identity, profiles).unwrap();
        let rep = breakpoint_smoothness(&m, 1);
        let at2 = &rep.breakpoints[0];
        assert!(at2.mismatch[0] <= 1e-8);
        assert!(!at2.pass && at2.mismatch[1] > 1e-8);
        assert!(matches!(
            require_smooth(&m),
            Err(Error::GluingIncompatible { breakpoint, .. }) if breakpoint == 2.0
        ));
    }

    #[test]
    fn family_endpoints() {
        let n = models::hyperbolic_cylinder();
        let iso = TwistIsotopy::new(local_twist());
        let rho = build_rho_r(18.0, &n).unwrap();
        let one = build_lambda_r_s(18.0, 1.0, &iso, &n, 0.1).unwrap();
        let zero = build_lambda_r_s(18.0, 0.0, &iso, &n, 0.1).unwrap();
        let lam = build_lambda_r(18.0, &n, local_twist(), 0.1).unwrap();
        let below = build_lambda_r_s(18.0, 0.5 - 1e-9, &iso, &n, 0.1).unwrap();
        let half = build_lambda_r_s(18.0, 0.5, &iso, &n, 0.1).unwrap();
        for i in 0..60 {
            let t = 0.05 + 0.0991 * i as f64;
            let x = [3.1, 0.2, 1.7, t];
            assert_eq!(one.eval(&x), rho.eval(&x));
            assert_eq!(zero.eval(&x), lam.eval(&x));
            let (a, b) = (below.eval(&x), half.eval(&x));
            assert!((a - &b).amax() <= 1e-12 * b.amax());
        }
        // s = 1/2 on [3,4]: circle coefficient cosh²(αt)
        let g = half.eval(&[3.1, 0.2, 1.7, 3.5]);
        assert!((g[(2, 2)] - (3.0 * 3.5_f64).cosh().powi(2)).abs() <= 1e-12 * g[(2, 2)]);
        assert!(breakpoint_smoothness(&build_lambda_r_s(18.0, 0.75, &iso, &n, 0.1).unwrap(), 2).pass);
    }

    #[test]
    fn s_outside_unit_interval() {
        let iso = TwistIsotopy::new(GluingMap::Identity);
        assert!(build_lambda_r_s(12.0, 1.5, &iso, &models::flat_circle(), 0.1).is_err());
        assert!(build_rho_r(0.0, &models::flat_circle()).is_err());
    }
}
