//! Run configurations: one JSON object per run, unknown keys rejected.

use serde::{Deserialize, Serialize};

use crate::engine::chart::ChartMetric;
use crate::engine::models;
use crate::error::{Error, Result};
use crate::families::{build_lambda_r, build_lambda_r_s, build_rho_r, GluingMap, TwistIsotopy, BREAKPOINTS, T_RANGE};
use crate::pinching::{arithmetic_grid, geometric_grid, SamplingSpec, WarpFamily};
use crate::warp::{DoublyWarped, WarpFunction};

fn invalid(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::InvalidParameter { name, value, reason }
}

/// A model chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Euclidean { dim: usize },
    FlatTorus { dim: usize },
    Circle,
    Sphere,
    PolarPlane,
    HyperbolicHalfSpace { dim: usize },
    HyperbolicCylinder,
}

impl ModelSpec {
    pub fn build(&self) -> Result<ChartMetric> {
        let dim_ok = |d: usize, min: usize| {
            if (min..=4).contains(&d) {
                Ok(d)
            } else {
                Err(invalid("dim", d as f64, "model dimension must lie in the supported range"))
            }
        };
        Ok(match self {
            ModelSpec::Euclidean { dim } => models::euclidean(dim_ok(*dim, 1)?),
            ModelSpec::FlatTorus { dim } => models::flat_torus(dim_ok(*dim, 1)?),
            ModelSpec::Circle => models::flat_circle(),
            ModelSpec::Sphere => models::unit_sphere(),
            ModelSpec::PolarPlane => models::polar_plane(),
            ModelSpec::HyperbolicHalfSpace { dim } => models::hyperbolic_half_space(dim_ok(*dim, 2)?),
            ModelSpec::HyperbolicCylinder => models::hyperbolic_cylinder(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WarpSpec {
    Exp,
    Cosh,
    Sinh,
    Constant { value: f64 },
    SinOffset { offset: f64 },
    ExpCombination { c: f64 },
}

impl WarpSpec {
    pub fn build(&self) -> Result<WarpFunction> {
        Ok(match *self {
            WarpSpec::Exp => WarpFunction::exp(),
            WarpSpec::Cosh => WarpFunction::cosh(),
            WarpSpec::Sinh => WarpFunction::sinh(),
            WarpSpec::Constant { value } => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(invalid("value", value, "constant warp must be positive"));
                }
                WarpFunction::constant(value)
            }
            WarpSpec::SinOffset { offset } => {
                if !(offset > 1.0 && offset.is_finite()) {
                    return Err(invalid("offset", offset, "must exceed 1 so the warp stays positive"));
                }
                WarpFunction::sin_offset(offset)
            }
            WarpSpec::ExpCombination { c } => {
                if !c.is_finite() {
                    return Err(invalid("c", c, "must be finite"));
                }
                WarpFunction::exp_combination(c)
            }
        })
    }
}

/// `φ₁²(αt)σ₁ + φ₂²(αt)σ₂ + α²dt²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoublyWarpedSpec {
    pub factor1: ModelSpec,
    pub factor2: ModelSpec,
    pub phi1: WarpSpec,
    pub phi2: WarpSpec,
    #[serde(default = "one")]
    pub alpha: f64,
    pub t_domain: (f64, f64),
}

fn one() -> f64 {
    1.0
}

impl DoublyWarpedSpec {
    pub fn build(&self) -> Result<DoublyWarped> {
        DoublyWarped::rescaled(
            self.factor1.build()?,
            self.factor2.build()?,
            self.phi1.build()?,
            self.phi2.build()?,
            self.alpha,
            self.t_domain,
        )
    }
}

fn default_margin() -> f64 {
    0.1
}

fn identity_twist() -> GluingMap {
    GluingMap::Identity
}

/// One of the explicit families on `N × S¹ × [0, 6]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    RhoR {
        r: f64,
        factor: ModelSpec,
    },
    LambdaR {
        r: f64,
        factor: ModelSpec,
        #[serde(default = "identity_twist")]
        twist: GluingMap,
        #[serde(default = "default_margin")]
        margin: f64,
    },
    LambdaRS {
        r: f64,
        s: f64,
        factor: ModelSpec,
        #[serde(default = "identity_twist")]
        twist: GluingMap,
        #[serde(default = "default_margin")]
        margin: f64,
    },
}

impl FamilySpec {
    pub fn build(&self) -> Result<ChartMetric> {
        match self {
            FamilySpec::RhoR { r, factor } => build_rho_r(*r, &factor.build()?),
            FamilySpec::LambdaR { r, factor, twist, margin } => {
                Ok(build_lambda_r(*r, &factor.build()?, twist.clone(), *margin)?.chart())
            }
            FamilySpec::LambdaRS {
                r,
                s,
                factor,
                twist,
                margin,
            } => {
                let iso = TwistIsotopy::new(twist.clone());
                Ok(build_lambda_r_s(*r, *s, &iso, &factor.build()?, *margin)?.chart())
            }
        }
    }
}

/// Any metric a curvature sweep can run on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    Model { model: ModelSpec },
    DoublyWarped(DoublyWarpedSpec),
    Family { family: FamilySpec },
}

impl MetricSpec {
    pub fn build(&self) -> Result<ChartMetric> {
        match self {
            MetricSpec::Model { model } => model.build(),
            MetricSpec::DoublyWarped(d) => Ok(d.build()?.chart().clone()),
            MetricSpec::Family { family } => family.build(),
        }
    }

    fn is_family(&self) -> bool {
        matches!(self, MetricSpec::Family { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Geometric { start: f64, ratio: f64, count: usize },
    Arithmetic { start: f64, step: f64, count: usize },
    Explicit { values: Vec<f64> },
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let count_ok = |c: usize| {
            if (1..=100_000).contains(&c) {
                Ok(c)
            } else {
                Err(invalid("count", c as f64, "must lie in [1, 100000]"))
            }
        };
        let v = match *self {
            GridSpec::Geometric { start, ratio, count } => {
                if !(start > 0.0 && ratio > 1.0) {
                    return Err(invalid("ratio", ratio, "geometric grid needs start > 0 and ratio > 1"));
                }
                geometric_grid(start, ratio, count_ok(count)?)
            }
            GridSpec::Arithmetic { start, step, count } => {
                if !(step > 0.0) {
                    return Err(invalid("step", step, "must be positive"));
                }
                arithmetic_grid(start, step, count_ok(count)?)
            }
            GridSpec::Explicit { ref values } => values.clone(),
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) || v.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("values", f64::NAN, "grid must be finite and strictly increasing"));
        }
        Ok(v)
    }
}

/// Sampling parameters; the target interval comes from the command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    /// Defaults to the branch intervals for families and to random points otherwise.
    #[serde(default)]
    pub t_intervals: Option<Vec<(f64, f64)>>,
    #[serde(default = "default_points")]
    pub points_per_interval: usize,
    #[serde(default = "default_points")]
    pub random_points: usize,
    #[serde(default = "default_planes")]
    pub planes_per_point: usize,
    #[serde(default = "default_exclusion")]
    pub exclusion: f64,
}

fn default_points() -> usize {
    256
}

fn default_planes() -> usize {
    20
}

fn default_exclusion() -> f64 {
    2e-5
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            t_intervals: None,
            points_per_interval: default_points(),
            random_points: default_points(),
            planes_per_point: default_planes(),
            exclusion: default_exclusion(),
        }
    }
}

/// Lower end of the sampled t-range on the families: the tube core t = 0 is
/// a polar coordinate singularity and branch 0 is the exact tube anyway.
pub const FAMILY_T_START: f64 = 0.25;

pub fn family_intervals() -> Vec<(f64, f64)> {
    let mut ends = vec![FAMILY_T_START];
    ends.extend(BREAKPOINTS);
    ends.push(T_RANGE.1);
    ends.windows(2).map(|w| (w[0], w[1])).collect()
}

impl SamplingConfig {
    pub fn spec(&self, target: (f64, f64), seed: u64, family: bool) -> Result<SamplingSpec> {
        for (name, v) in [
            ("points_per_interval", self.points_per_interval),
            ("random_points", self.random_points),
            ("planes_per_point", self.planes_per_point),
        ] {
            if !(1..=100_000).contains(&v) {
                return Err(invalid(name, v as f64, "must lie in [1, 100000]"));
            }
        }
        let mut spec = SamplingSpec::new(target).with_seed(seed).with_planes(self.planes_per_point);
        spec.points_per_interval = self.points_per_interval;
        spec.random_points = self.random_points;
        spec.exclusion = self.exclusion;
        match (&self.t_intervals, family) {
            (Some(iv), _) => {
                spec.t_intervals = iv.clone();
                if family {
                    spec.breakpoints = BREAKPOINTS.to_vec();
                }
            }
            (None, true) => {
                spec.t_intervals = family_intervals();
                spec.breakpoints = BREAKPOINTS.to_vec();
            }
            (None, false) => {}
        }
        Ok(spec)
    }
}

fn check_epsilon(eps: f64) -> Result<f64> {
    if eps > 0.0 && eps.is_finite() {
        Ok(eps)
    } else {
        Err(invalid("epsilon", eps, "must be positive"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureSweepConfig {
    pub metric: MetricSpec,
    /// Open interval the sampled curvatures must lie in.
    pub target: (f64, f64),
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub seed: u64,
}

impl CurvatureSweepConfig {
    pub fn sampling_spec(&self) -> Result<SamplingSpec> {
        self.sampling.spec(self.target, self.seed, self.metric.is_family())
    }
}

/// The two threshold searches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "search", rename_all = "snake_case", deny_unknown_fields)]
pub enum PinchFindConfig {
    /// α₀ of a warp family from its generating terms.
    Alpha0 {
        phi1: WarpSpec,
        phi2: WarpSpec,
        t_interval: (f64, f64),
        /// `null` for a one-dimensional factor.
        k1_bounds: Option<(f64, f64)>,
        k2_bounds: Option<(f64, f64)>,
        epsilon: f64,
        alpha_grid: GridSpec,
        #[serde(default = "default_points")]
        t_samples: usize,
        #[serde(default)]
        seed: u64,
    },
    /// r* of (λ_r)_s over the given s-samples.
    MinR {
        factor: ModelSpec,
        #[serde(default = "identity_twist")]
        twist: GluingMap,
        #[serde(default = "default_margin")]
        margin: f64,
        epsilon: f64,
        r_grid: GridSpec,
        #[serde(default = "default_s_samples")]
        s_samples: Vec<f64>,
        #[serde(default)]
        sampling: SamplingConfig,
        #[serde(default)]
        seed: u64,
    },
}

fn default_s_samples() -> Vec<f64> {
    vec![1.0]
}

impl PinchFindConfig {
    pub fn seed_mut(&mut self) -> &mut u64 {
        match self {
            PinchFindConfig::Alpha0 { seed, .. } | PinchFindConfig::MinR { seed, .. } => seed,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            PinchFindConfig::Alpha0 { seed, .. } | PinchFindConfig::MinR { seed, .. } => *seed,
        }
    }

    pub fn warp_family(&self) -> Result<WarpFamily> {
        match self {
            PinchFindConfig::Alpha0 {
                phi1,
                phi2,
                t_interval,
                k1_bounds,
                k2_bounds,
                ..
            } => WarpFamily::fixed("config", phi1.build()?, phi2.build()?, *t_interval, *k1_bounds, *k2_bounds),
            PinchFindConfig::MinR { .. } => Err(invalid("search", f64::NAN, "min_r has no warp family")),
        }
    }

    pub fn epsilon(&self) -> Result<f64> {
        match self {
            PinchFindConfig::Alpha0 { epsilon, .. } | PinchFindConfig::MinR { epsilon, .. } => check_epsilon(*epsilon),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyCheckConfig {
    pub family: FamilySpec,
    pub epsilon: f64,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default = "default_order")]
    pub smoothness_order: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_order() -> usize {
    2
}

impl FamilyCheckConfig {
    pub fn epsilon(&self) -> Result<f64> {
        check_epsilon(self.epsilon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowTarget {
    FlatTorus,
    HyperbolicCylinder,
}

impl FlowTarget {
    pub fn build(self) -> ChartMetric {
        match self {
            FlowTarget::FlatTorus => models::flat_torus(2),
            FlowTarget::HyperbolicCylinder => models::hyperbolic_cylinder(),
        }
    }
}

/// Initial curve `γₐ(θ) = windingₐ θ + offsetₐ + amplitudeₐ sin(modeₐ θ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatflowConfig {
    pub target: FlowTarget,
    #[serde(default = "default_points")]
    pub npts: usize,
    pub winding: [i64; 2],
    #[serde(default)]
    pub offset: [f64; 2],
    #[serde(default)]
    pub amplitude: [f64; 2],
    #[serde(default = "default_modes")]
    pub modes: [u32; 2],
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    /// Checked against the final energy when given.
    #[serde(default)]
    pub expected_energy: Option<f64>,
    #[serde(default = "default_energy_tolerance")]
    pub energy_tolerance: f64,
    /// Every how many steps a trace row is written.
    #[serde(default = "default_stride")]
    pub trace_stride: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_modes() -> [u32; 2] {
    [2, 1]
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_steps() -> usize {
    200_000
}

fn default_energy_tolerance() -> f64 {
    1e-3
}

fn default_stride() -> usize {
    100
}

impl HeatflowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(16..=4096).contains(&self.npts) {
            return Err(invalid("npts", self.npts as f64, "must lie in [16, 4096]"));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("tol", self.tol, "must be positive"));
        }
        if self.max_steps > 10_000_000 {
            return Err(invalid("max_steps", self.max_steps as f64, "must not exceed 1e7"));
        }
        if self.target == FlowTarget::HyperbolicCylinder && self.winding[1] != 0 {
            return Err(invalid("winding", self.winding[1] as f64, "the cylinder's second axis is not periodic"));
        }
        for v in self.offset.iter().chain(&self.amplitude) {
            if !v.is_finite() {
                return Err(invalid("amplitude", *v, "must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCheckConfig {
    pub configs: Vec<DoublyWarpedSpec>,
    #[serde(default = "default_frames")]
    pub frames_per_config: usize,
    #[serde(default = "default_oracle_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_frames() -> usize {
    100
}

fn default_oracle_tol() -> f64 {
    1e-5
}
