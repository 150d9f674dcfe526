//! Closed-form sectional curvature against the chart curvature engine.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::engine::chart::check_positive_definite;
use crate::engine::curvature::riemann_at;
use crate::error::Result;
use crate::warp::frame::convex_weights;
use crate::warp::product::DoublyWarped;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleSample {
    pub point: Vec<f64>,
    pub closed_form: f64,
    pub engine: f64,
    /// Sum of the convex weights of the frame.
    pub weight_sum: f64,
}

impl OracleSample {
    pub fn error(&self) -> f64 {
        (self.closed_form - self.engine).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub metric: String,
    pub frames: usize,
    pub max_error: f64,
    pub max_weight_error: f64,
    #[serde(skip)]
    pub samples: Vec<OracleSample>,
}

/// `frames` random points and planes; at each, the closed-form curvature and
/// the engine's sectional curvature of the assembled chart. Planes are drawn
/// isotropically for the metric, points inside the middle 90% of every
/// interval axis.
pub fn oracle_check(w: &DoublyWarped, frames: usize, seed: u64) -> Result<OracleReport> {
    let chart = w.chart();
    let n = chart.dim();
    let mut samples = Vec::with_capacity(frames);
    for i in 0..frames {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let x = chart.domain().sample(&mut rng, 0.05);
        let g = chart.eval(&x);
        let lt = check_positive_definite(&g, &x)?.l().transpose();
        let mut draw = || {
            let c = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            lt.solve_upper_triangular(&c).expect("Cholesky factor is invertible")
        };
        let a = draw();
        let b = draw();
        let closed_form = w.closed_form_K(&x, a.as_slice(), b.as_slice())?;
        let engine = riemann_at(chart, &x)?.sectional(a.as_slice(), b.as_slice())?;
        let frame = w.frame_from_plane(&x, a.as_slice(), b.as_slice())?;
        let weight_sum = convex_weights(&frame).iter().sum();
        samples.push(OracleSample {
            point: x,
            closed_form,
            engine,
            weight_sum,
        });
    }
    let max_error = samples.iter().map(OracleSample::error).fold(0.0, nan_max);
    let max_weight_error = samples.iter().map(|s| (s.weight_sum - 1.0).abs()).fold(0.0, nan_max);
    Ok(OracleReport {
        metric: chart.name().to_string(),
        frames,
        max_error,
        max_weight_error,
        samples,
    })
}

/// `max` that keeps NaN, so a broken sample cannot hide.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}
