//! The five commands. Each returns its results, a verdict and CSV tables.

use std::f64::consts::TAU;

use serde::Serialize;
use serde_json::{json, Value};

use crate::cli::config::*;
use crate::error::{Error, Result};
use crate::families::{
    breakpoint_smoothness, build_lambda_r_s, build_lambda_r_unchecked, build_rho_r, FamilyProfiles, TwistIsotopy,
};
use crate::heatflow::{flow_until, ClosedCurve, FlowStatus, FlowTrace};
use crate::pinching::{curvature_range, find_alpha0, find_min_r, range::CSV_HEADER, SamplingSpec};
use crate::warp::oracle_check;

/// A CSV file: name, column header and rows.
pub struct Table {
    pub name: &'static str,
    pub header: String,
    pub rows: Vec<String>,
}

pub struct Outcome {
    pub results: Value,
    pub pass: bool,
    pub tables: Vec<Table>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialise")
}

pub fn curvature_sweep(cfg: &CurvatureSweepConfig) -> Result<Outcome> {
    if !(cfg.target.0 < cfg.target.1) {
        return Err(Error::InvalidParameter {
            name: "target",
            value: cfg.target.0,
            reason: "lower end must be below upper end",
        });
    }
    let metric = cfg.metric.build()?;
    let spec = cfg.sampling_spec()?;
    let parameter = match &cfg.metric {
        MetricSpec::Family { family } => family_r(family),
        MetricSpec::DoublyWarped(d) => d.alpha,
        MetricSpec::Model { .. } => 0.0,
    };
    let rep = curvature_range(&metric, &spec, parameter)?;
    Ok(Outcome {
        pass: rep.verdict.is_pass(),
        tables: vec![Table {
            name: "curvature.csv",
            header: CSV_HEADER.to_string(),
            rows: rep.csv_rows(),
        }],
        results: to_value(&rep),
    })
}

fn family_r(f: &FamilySpec) -> f64 {
    match f {
        FamilySpec::RhoR { r, .. } | FamilySpec::LambdaR { r, .. } | FamilySpec::LambdaRS { r, .. } => *r,
    }
}

pub fn pinch_find(cfg: &PinchFindConfig) -> Result<Outcome> {
    let epsilon = cfg.epsilon()?;
    match cfg {
        PinchFindConfig::Alpha0 {
            alpha_grid, t_samples, ..
        } => {
            let family = cfg.warp_family()?;
            if !(2..=100_000).contains(t_samples) {
                return Err(Error::InvalidParameter {
                    name: "t_samples",
                    value: *t_samples as f64,
                    reason: "must lie in [2, 100000]",
                });
            }
            let rep = find_alpha0(&family, epsilon, &alpha_grid.values()?, *t_samples)?;
            let rows = rep
                .rows
                .iter()
                .map(|r| format!("{},{},{},{},{}", r.alpha, r.max_deviation, r.witness_term, r.witness_t, r.inside))
                .collect();
            Ok(Outcome {
                pass: rep.alpha0.is_some(),
                tables: vec![Table {
                    name: "alpha_grid.csv",
                    header: "alpha,max_deviation,witness_term,witness_t,inside".into(),
                    rows,
                }],
                results: to_value(&rep),
            })
        }
        PinchFindConfig::MinR {
            factor,
            twist,
            margin,
            r_grid,
            s_samples,
            sampling,
            seed,
            ..
        } => {
            let sigma = factor.build()?;
            for &s in s_samples {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::InvalidParameter {
                        name: "s_samples",
                        value: s,
                        reason: "must lie in [0, 1]",
                    });
                }
            }
            let iso = TwistIsotopy::new(twist.clone());
            twist.validate(sigma.dim())?;
            let builder = |r: f64, s: f64| build_lambda_r_s(r, s, &iso, &sigma, *margin).map(|m| m.chart());
            let spec = sampling.spec((-1.0 - epsilon, -1.0 + epsilon), *seed, true)?;
            let rep = find_min_r(&builder, epsilon, &r_grid.values()?, &spec, s_samples)?;
            let rows = rep
                .cells
                .iter()
                .map(|c| format!("{},{},{},{},{}", c.r, c.s, c.k_min, c.k_max, c.inside))
                .collect();
            Ok(Outcome {
                pass: rep.r_star.is_some(),
                tables: vec![Table {
                    name: "r_grid.csv",
                    header: "r,s,k_min,k_max,inside".into(),
                    rows,
                }],
                results: to_value(&rep),
            })
        }
    }
}

pub fn family_check(cfg: &FamilyCheckConfig) -> Result<Outcome> {
    let epsilon = cfg.epsilon()?;
    if cfg.smoothness_order > 2 {
        return Err(Error::InvalidParameter {
            name: "smoothness_order",
            value: cfg.smoothness_order as f64,
            reason: "must be 0, 1 or 2",
        });
    }
    let (chart, smoothness) = match &cfg.family {
        FamilySpec::RhoR { r, factor } => (build_rho_r(*r, &factor.build()?)?, None),
        FamilySpec::LambdaR { r, factor, twist, margin } => {
            let m = build_lambda_r_unchecked(*r, &factor.build()?, twist.clone(), FamilyProfiles::new(*margin)?)?;
            (m.chart(), Some(breakpoint_smoothness(&m, cfg.smoothness_order)))
        }
        FamilySpec::LambdaRS {
            r,
            s,
            factor,
            twist,
            margin,
        } => {
            let iso = TwistIsotopy::new(twist.clone());
            let m = build_lambda_r_s(*r, *s, &iso, &factor.build()?, *margin)?;
            (m.chart(), Some(breakpoint_smoothness(&m, cfg.smoothness_order)))
        }
    };
    let spec: SamplingSpec = cfg.sampling.spec((-1.0 - epsilon, -1.0 + epsilon), cfg.seed, true)?;
    let range = curvature_range(&chart, &spec, family_r(&cfg.family))?;
    let smooth_ok = smoothness.as_ref().is_none_or(|s| s.pass);
    Ok(Outcome {
        pass: smooth_ok && range.verdict.is_pass(),
        tables: vec![Table {
            name: "curvature.csv",
            header: CSV_HEADER.to_string(),
            rows: range.csv_rows(),
        }],
        results: json!({ "curvature_range": range, "smoothness": smoothness }),
    })
}

#[derive(Serialize)]
struct HeatflowResults {
    status: FlowStatus,
    steps: usize,
    initial_energy: f64,
    final_energy: f64,
    final_tension_max: f64,
    energy_monotone: bool,
    winding_initial: Vec<i64>,
    winding_final: Vec<i64>,
    energy_check: Option<bool>,
    blow_up_step: Option<usize>,
}

pub fn heatflow(cfg: &HeatflowConfig) -> Result<Outcome> {
    cfg.validate()?;
    let w = cfg.winding;
    let curve = ClosedCurve::from_fn(cfg.target.build(), cfg.npts, w.to_vec(), |th| {
        (0..2)
            .map(|a| w[a] as f64 * th + cfg.offset[a] + cfg.amplitude[a] * (cfg.modes[a] as f64 * th).sin())
            .collect()
    })?;
    let initial_energy = curve.energy();
    let (last, trace, blow_up_step) = match flow_until(&curve, cfg.tol, cfg.max_steps) {
        Ok((c, t)) => (Some(c), t, None),
        Err(Error::BlowUp { step }) => (
            None,
            FlowTrace {
                records: Vec::new(),
                status: FlowStatus::BlowUp,
            },
            Some(step),
        ),
        Err(e) => return Err(e),
    };
    let final_energy = trace.final_energy();
    let energy_check = cfg
        .expected_energy
        .map(|e| (final_energy - e).abs() <= cfg.energy_tolerance);
    let res = HeatflowResults {
        status: trace.status,
        steps: trace.records.len().saturating_sub(1),
        initial_energy,
        final_energy,
        final_tension_max: trace.records.last().map_or(f64::NAN, |r| r.tension_max),
        energy_monotone: trace.energy_monotone(crate::heatflow::flow::ENERGY_SLACK),
        winding_initial: curve.measured_winding(),
        winding_final: last.as_ref().map_or_else(Vec::new, |c| c.measured_winding()),
        energy_check,
        blow_up_step,
    };
    let pass = res.status == FlowStatus::Converged
        && res.energy_monotone
        && res.winding_final == res.winding_initial
        && energy_check.unwrap_or(true);
    let mut tables = vec![Table {
        name: "trace.csv",
        header: FlowTrace::CSV_HEADER.into(),
        rows: trace.csv_rows(cfg.trace_stride),
    }];
    if let Some(c) = &last {
        let n = c.len();
        tables.push(Table {
            name: "curve.csv",
            header: "index,theta,x0,x1".into(),
            rows: c
                .samples()
                .iter()
                .enumerate()
                .map(|(i, x)| format!("{i},{},{},{}", TAU * i as f64 / n as f64, x[0], x[1]))
                .collect(),
        });
    }
    Ok(Outcome {
        results: to_value(&res),
        pass,
        tables,
    })
}

pub fn oracle(cfg: &OracleCheckConfig) -> Result<Outcome> {
    if cfg.configs.is_empty() {
        return Err(Error::InvalidParameter {
            name: "configs",
            value: 0.0,
            reason: "at least one configuration is required",
        });
    }
    if !(1..=100_000).contains(&cfg.frames_per_config) {
        return Err(Error::InvalidParameter {
            name: "frames_per_config",
            value: cfg.frames_per_config as f64,
            reason: "must lie in [1, 100000]",
        });
    }
    if !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tolerance",
            value: cfg.tolerance,
            reason: "must be positive",
        });
    }
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for (ci, spec) in cfg.configs.iter().enumerate() {
        let w = spec.build()?;
        let rep = oracle_check(&w, cfg.frames_per_config, cfg.seed)?;
        for (fi, s) in rep.samples.iter().enumerate() {
            rows.push(format!("{ci},{fi},{},{},{}", s.closed_form, s.engine, s.error()));
        }
        reports.push(rep);
    }
    let max_error = reports.iter().map(|r| r.max_error).fold(0.0, nan_max);
    let total: usize = reports.iter().map(|r| r.frames).sum();
    Ok(Outcome {
        pass: max_error <= cfg.tolerance,
        results: json!({
            "configs": reports,
            "total_frames": total,
            "max_error": max_error,
            "tolerance": cfg.tolerance,
        }),
        tables: vec![Table {
            name: "oracle.csv",
            header: "config,frame,closed_form,engine,abs_error".into(),
            rows,
        }],
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
