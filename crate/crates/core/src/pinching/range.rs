//! Sampled sectional-curvature ranges and the minimal-r search.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::chart::{check_positive_definite, ChartMetric};
use crate::engine::curvature::riemann_at;
use crate::error::{Error, Result};
use crate::pinching::terms::{generating_terms, linspace, WarpFamily, TERM_NAMES};

/// Where and how densely a metric is sampled.
///
/// The last chart axis is `t`. With `t_intervals` non-empty, `t` runs over
/// `points_per_interval` evenly spaced values per interval and the other
/// coordinates are drawn at random; interval ends that are breakpoints are
/// pulled in by `exclusion`. With no intervals every coordinate is random.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default)]
    pub t_intervals: Vec<(f64, f64)>,
    #[serde(default = "default_points")]
    pub points_per_interval: usize,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    #[serde(default = "default_exclusion")]
    pub exclusion: f64,
    #[serde(default = "default_planes")]
    pub planes_per_point: usize,
    /// Number of points when `t_intervals` is empty.
    #[serde(default = "default_points")]
    pub random_points: usize,
    #[serde(default)]
    pub seed: u64,
    /// Open target interval for the verdict.
    pub target: (f64, f64),
}

fn default_points() -> usize {
    256
}

fn default_exclusion() -> f64 {
    2e-5
}

fn default_planes() -> usize {
    20
}

impl SamplingSpec {
    pub fn new(target: (f64, f64)) -> Self {
        SamplingSpec {
            t_intervals: Vec::new(),
            points_per_interval: default_points(),
            breakpoints: Vec::new(),
            exclusion: default_exclusion(),
            planes_per_point: default_planes(),
            random_points: default_points(),
            seed: 0,
            target,
        }
    }

    /// Target `(−1−ε, −1+ε)`.
    pub fn pinched(epsilon: f64) -> Self {
        Self::new((-1.0 - epsilon, -1.0 + epsilon))
    }

    pub fn with_intervals(mut self, intervals: Vec<(f64, f64)>, breakpoints: Vec<f64>) -> Self {
        self.t_intervals = intervals;
        self.breakpoints = breakpoints;
        self
    }

    pub fn with_points(mut self, n: usize) -> Self {
        self.points_per_interval = n;
        self.random_points = n;
        self
    }

    pub fn with_planes(mut self, n: usize) -> Self {
        self.planes_per_point = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.target.0 < self.target.1) {
            return Err(Error::InvalidParameter {
                name: "target",
                value: self.target.0,
                reason: "lower end must be below upper end",
            });
        }
        if self.planes_per_point == 0 {
            return Err(Error::InvalidParameter {
                name: "planes_per_point",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        for &(lo, hi) in &self.t_intervals {
            if !(lo < hi) {
                return Err(Error::InvalidParameter {
                    name: "t_intervals",
                    value: lo,
                    reason: "interval is empty",
                });
            }
        }
        if !(self.exclusion >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "exclusion",
                value: self.exclusion,
                reason: "must be non-negative",
            });
        }
        Ok(())
    }

    /// The sampled `t` values, in order.
    pub fn t_values(&self) -> Vec<f64> {
        let near_break = |t: f64| self.breakpoints.iter().any(|&b| (b - t).abs() < self.exclusion);
        let mut out = Vec::new();
        for &(lo, hi) in &self.t_intervals {
            let a = if near_break(lo) { lo + self.exclusion } else { lo };
            let b = if near_break(hi) { hi - self.exclusion } else { hi };
            out.extend(linspace(a, b, self.points_per_interval.max(2)));
        }
        out
    }

    fn describe(&self) -> String {
        if self.t_intervals.is_empty() {
            format!("{} random points x {} planes", self.random_points, self.planes_per_point)
        } else {
            format!(
                "t in {:?}, {} points per interval, breakpoint exclusion {:e}, {} planes per point",
                self.t_intervals, self.points_per_interval, self.exclusion, self.planes_per_point
            )
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

/// One sampled sectional curvature.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneSample {
    pub t: f64,
    pub plane: usize,
    pub k: f64,
}

/// Extremes of one generating term over the sampled `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermExtremum {
    pub term: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinchReport {
    /// Family parameter (α, r or s) the report belongs to.
    pub parameter: f64,
    pub metric: String,
    pub k_min: f64,
    pub k_max: f64,
    pub argmin: Vec<f64>,
    pub argmax: Vec<f64>,
    pub samples_taken: usize,
    /// Per-term extrema, excluded K-terms omitted.
    pub term_extrema: Option<Vec<TermExtremum>>,
    pub grid: String,
    pub seed: u64,
    pub target: (f64, f64),
    pub verdict: Verdict,
    #[serde(skip)]
    pub samples: Vec<PlaneSample>,
    #[serde(skip)]
    pub term_samples: Vec<(f64, usize, f64, f64)>,
}

impl PinchReport {
    /// Largest distance of the range from −1.
    pub fn deviation_from_minus_one(&self) -> f64 {
        (self.k_min + 1.0).abs().max((self.k_max + 1.0).abs())
    }

    pub fn inside(&self, target: (f64, f64)) -> bool {
        self.k_min > target.0 && self.k_max < target.1
    }

    /// Whether the term extrema bracket the sampled range.
    pub fn bracketed(&self, slack: f64) -> Option<bool> {
        self.term_extrema.as_ref().map(|ts| {
            let lo = ts.iter().map(|t| t.min).fold(f64::INFINITY, f64::min);
            let hi = ts.iter().map(|t| t.max).fold(f64::NEG_INFINITY, f64::max);
            lo <= self.k_min + slack && self.k_max <= hi + slack
        })
    }

    /// Rows `parameter,t,series,index,value`: one per sampled plane and one per
    /// term end.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows = Vec::with_capacity(self.samples.len() + 2 * self.term_samples.len());
        for s in &self.samples {
            rows.push(format!("{},{},plane,{},{}", self.parameter, s.t, s.plane, s.k));
        }
        for &(t, i, lo, hi) in &self.term_samples {
            rows.push(format!("{},{t},term_lo,{i},{lo}", self.parameter));
            rows.push(format!("{},{t},term_hi,{i},{hi}", self.parameter));
        }
        rows
    }
}

pub const CSV_HEADER: &str = "parameter,t,series,index,value";

fn sample_point(metric: &ChartMetric, t: Option<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = metric.domain().sample(rng, 0.05);
    if let Some(t) = t {
        *x.last_mut().expect("non-empty chart") = t;
    }
    x
}

struct PointResult {
    point: Vec<f64>,
    ks: Vec<f64>,
}

fn sample_planes(metric: &ChartMetric, x: &[f64], planes: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let g = metric.eval(x);
    let chol = check_positive_definite(&g, x)?;
    let lt = chol.l().transpose();
    let r = riemann_at(metric, x)?;
    let n = x.len();
    let draw = |rng: &mut ChaCha8Rng| -> DVector<f64> {
        let c = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        lt.solve_upper_triangular(&c).expect("Cholesky factor is invertible")
    };
    let mut out = Vec::with_capacity(planes);
    for _ in 0..planes {
        let a = draw(rng);
        let b = draw(rng);
        let k = r.sectional(a.as_slice(), b.as_slice())?;
        if !k.is_finite() {
            return Err(Error::NonFiniteCurvature { point: x.to_vec() });
        }
        out.push(k);
    }
    Ok(out)
}

/// Sectional-curvature extrema over the sampling grid, `planes_per_point`
/// random planes per point.
///
/// Plane vectors are `L⁻ᵀc` with `c` standard normal and `g = LLᵀ`, so the
/// planes are uniformly distributed with respect to the metric, and the
/// sample is unchanged under diagonal coordinate rescalings such as `t ↦ αt`.
pub fn curvature_range(metric: &ChartMetric, spec: &SamplingSpec, parameter: f64) -> Result<PinchReport> {
    spec.validate()?;
    let ts = spec.t_values();
    let points: Vec<Option<f64>> = if spec.t_intervals.is_empty() {
        vec![None; spec.random_points]
    } else {
        ts.iter().map(|&t| Some(t)).collect()
    };
    let results: Vec<Result<PointResult>> = points
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(i as u64));
            let x = sample_point(metric, t, &mut rng);
            metric.domain().check(&x)?;
            let ks = sample_planes(metric, &x, spec.planes_per_point, &mut rng)?;
            Ok(PointResult { point: x, ks })
        })
        .collect();
    let n = metric.dim();
    let mut k_min = f64::INFINITY;
    let mut k_max = f64::NEG_INFINITY;
    let mut argmin = Vec::new();
    let mut argmax = Vec::new();
    let mut samples = Vec::new();
    for res in results {
        let p = res?;
        for (j, &k) in p.ks.iter().enumerate() {
            if k < k_min || k.is_nan() {
                k_min = k;
                argmin = p.point.clone();
            }
            if k > k_max || k.is_nan() {
                k_max = k;
                argmax = p.point.clone();
            }
            samples.push(PlaneSample {
                t: p.point[n - 1],
                plane: j,
                k,
            });
        }
    }
    let inside = k_min > spec.target.0 && k_max < spec.target.1;
    Ok(PinchReport {
        parameter,
        metric: metric.name().to_string(),
        k_min,
        k_max,
        argmin,
        argmax,
        samples_taken: samples.len(),
        term_extrema: None,
        grid: spec.describe(),
        seed: spec.seed,
        target: spec.target,
        verdict: Verdict::from_bool(inside),
        samples,
        term_samples: Vec::new(),
    })
}

/// Adds the extrema of the generating terms of `family` at `alpha` over the
/// report's `t` samples.
pub fn attach_terms(report: &mut PinchReport, family: &WarpFamily, alpha: f64, spec: &SamplingSpec) -> Result<()> {
    let mut ext: Vec<Option<(f64, f64)>> = vec![None; 5];
    let mut rows = Vec::new();
    for t in spec.t_values() {
        let terms = generating_terms(family, alpha, t)?;
        for (i, v) in terms.iter().enumerate() {
            if let Some(v) = v {
                let e = ext[i].get_or_insert((v.lo, v.hi));
                e.0 = e.0.min(v.lo);
                e.1 = e.1.max(v.hi);
                rows.push((t, i, v.lo, v.hi));
            }
        }
    }
    report.term_extrema = Some(
        ext.iter()
            .enumerate()
            .filter_map(|(i, e)| {
                e.map(|(min, max)| TermExtremum {
                    term: TERM_NAMES[i].to_string(),
                    min,
                    max,
                })
            })
            .collect(),
    );
    report.term_samples = rows;
    Ok(())
}

/// Sampled range of `metric` on the grid, with the term extrema of `family`
/// at `alpha` attached. The metric is expected to be `ρ_α` of the family.
pub fn family_range(metric: &ChartMetric, family: &WarpFamily, alpha: f64, spec: &SamplingSpec) -> Result<PinchReport> {
    let mut rep = curvature_range(metric, spec, alpha)?;
    attach_terms(&mut rep, family, alpha, spec)?;
    Ok(rep)
}

/// One `(r, s)` cell of the minimal-r search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RCell {
    pub r: f64,
    pub s: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub inside: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RRow {
    pub r: f64,
    /// Max over s-samples of the distance of the range from −1.
    pub worst_deviation: f64,
    pub inside: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinRReport {
    pub epsilon: f64,
    pub s_samples: Vec<f64>,
    pub r_star: Option<f64>,
    pub rows: Vec<RRow>,
    pub cells: Vec<RCell>,
    /// Worst deviation non-increasing along the grid (1e-12 slack).
    pub monotone: bool,
    pub grid: String,
    pub seed: u64,
}

/// Metric builder for the minimal-r search: `(r, s) ↦ chart`.
pub type RBuilder<'a> = dyn Fn(f64, f64) -> Result<ChartMetric> + Sync + 'a;

/// Smallest grid r from which every s-sample has its sampled range inside
/// `(−1−ε, −1+ε)`.
pub fn find_min_r(builder: &RBuilder<'_>, epsilon: f64, r_grid: &[f64], spec: &SamplingSpec, s_samples: &[f64]) -> Result<MinRReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            value: epsilon,
            reason: "must be positive",
        });
    }
    if r_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter {
            name: "r_grid",
            value: f64::NAN,
            reason: "grid must be strictly increasing",
        });
    }
    let s_list: Vec<f64> = if s_samples.is_empty() { vec![1.0] } else { s_samples.to_vec() };
    let target = (-1.0 - epsilon, -1.0 + epsilon);
    let mut spec = spec.clone();
    spec.target = target;
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &r in r_grid {
        let mut worst = 0.0_f64;
        let mut all_inside = true;
        for &s in &s_list {
            let m = builder(r, s)?;
            let rep = curvature_range(&m, &spec, r)?;
            let dev = rep.deviation_from_minus_one();
            worst = if dev.is_nan() { f64::NAN } else { worst.max(dev) };
            let inside = rep.inside(target);
            all_inside &= inside;
            cells.push(RCell {
                r,
                s,
                k_min: rep.k_min,
                k_max: rep.k_max,
                inside,
            });
        }
        rows.push(RRow {
            r,
            worst_deviation: worst,
            inside: all_inside,
        });
    }
    let mut first = rows.len();
    for i in (0..rows.len()).rev() {
        if rows[i].inside {
            first = i;
        } else {
            break;
        }
    }
    let monotone = rows.windows(2).all(|w| w[1].worst_deviation <= w[0].worst_deviation + 1e-12);
    Ok(MinRReport {
        epsilon,
        s_samples: s_list,
        r_star: rows.get(first).map(|r| r.r),
        rows,
        cells,
        monotone,
        grid: spec.describe(),
        seed: spec.seed,
    })
}
