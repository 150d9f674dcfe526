//! Explicit Euler heat flow `∂γ/∂t = τ(γ)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heatflow::curve::ClosedCurve;

/// Energy may rise by at most this much in one step.
pub const ENERGY_SLACK: f64 = 1e-12;

/// Diffusion stability bound `0.4 (2π/N)²`.
pub fn cfl_bound(curve: &ClosedCurve) -> f64 {
    let h = curve.dtheta();
    0.4 * h * h
}

/// One step `γ ← γ + dt τ(γ)`. Rejects steps above the stability bound,
/// reports blow-up on non-finite samples and checks the winding afterwards.
pub fn flow_step(curve: &ClosedCurve, dt: f64) -> Result<ClosedCurve> {
    let bound = cfl_bound(curve);
    if !(dt > 0.0 && dt <= bound) {
        return Err(Error::CflViolation { dt, bound });
    }
    let tau = curve.tension()?;
    step_with(curve, &tau, dt, 0)
}

fn step_with(curve: &ClosedCurve, tau: &[Vec<f64>], dt: f64, step: usize) -> Result<ClosedCurve> {
    let samples = curve.displaced(tau, dt);
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::BlowUp { step });
    }
    let next = curve.with_samples(samples);
    for x in next.samples() {
        next.target().domain().check(x).map_err(|_| Error::BlowUp { step })?;
    }
    let after = next.measured_winding();
    if after != curve.winding() {
        return Err(Error::WindingChanged {
            before: curve.winding().to_vec(),
            after,
        });
    }
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub energy: f64,
    pub tension_max: f64,
    pub dt: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxSteps,
    BlowUp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    /// Record `k` describes the curve after `k` steps.
    pub records: Vec<StepRecord>,
    pub status: FlowStatus,
}

impl FlowTrace {
    pub fn energy_monotone(&self, slack: f64) -> bool {
        self.records.windows(2).all(|w| w[1].energy <= w[0].energy + slack)
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.energy)
    }

    pub const CSV_HEADER: &'static str = "step,energy,tension_max,dt";

    pub fn csv_rows(&self, stride: usize) -> Vec<String> {
        let stride = stride.max(1);
        let last = self.records.len().saturating_sub(1);
        self.records
            .iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0 || *i == last)
            .map(|(_, r)| format!("{},{},{},{}", r.step, r.energy, r.tension_max, r.dt))
            .collect()
    }
}

/// Flows with the stability-bound step until the max tension norm is at most
/// `tol` or `max_steps` steps were taken. Blow-up and winding changes are
/// returned as errors.
pub fn flow_until(curve: &ClosedCurve, tol: f64, max_steps: usize) -> Result<(ClosedCurve, FlowTrace)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "must be positive",
        });
    }
    let dt = cfl_bound(curve);
    let mut cur = curve.clone();
    let mut records = Vec::new();
    for step in 0..=max_steps {
        let st = cur.state()?;
        records.push(StepRecord {
            step,
            energy: st.energy,
            tension_max: st.tension_max,
            dt: if step == 0 { 0.0 } else { dt },
        });
        if !st.tension_max.is_finite() {
            return Err(Error::BlowUp { step });
        }
        if st.tension_max <= tol {
            return Ok((
                cur,
                FlowTrace {
                    records,
                    status: FlowStatus::Converged,
                },
            ));
        }
        if step == max_steps {
            break;
        }
        cur = step_with(&cur, &st.tension, dt, step + 1)?;
    }
    Ok((
        cur,
        FlowTrace {
            records,
            status: FlowStatus::MaxSteps,
        },
    ))
}
