//! Acceptance checks, one pass/fail line per criterion. Runs without the test
//! harness so the lines always appear: `cargo test --test acceptance`.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use warpcurv::engine::curvature::{curvature_operator_at, koszul_residual, riemann_at};
use warpcurv::engine::{models, ChartMetric, DerivativeScheme};
use warpcurv::families::*;
use warpcurv::heatflow::{flow_until, ClosedCurve, FlowStatus};
use warpcurv::pinching::*;
use warpcurv::warp::*;

type Check = Result<String, String>;
type Outputs = (serde_json::Value, Vec<(String, Vec<u8>)>);
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(elapsed: Duration, secs: u64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() <= secs as f64, format!("{what} took {elapsed:?}, limit {secs} s"))
}

/// The four doubly warped configurations shared by the oracle and convexity checks.
fn configurations() -> Vec<DoublyWarped> {
    vec![
        DoublyWarped::new(models::unit_sphere(), models::flat_circle(), WarpFunction::sin_offset(2.0), WarpFunction::exp(), (-2.0, 2.0)),
        DoublyWarped::new(models::hyperbolic_half_plane(), models::flat_circle(), WarpFunction::cosh(), WarpFunction::sinh(), (0.3, 2.0)),
        DoublyWarped::rescaled(
            models::hyperbolic_half_plane(),
            models::unit_sphere(),
            WarpFunction::exp(),
            WarpFunction::exp_combination(0.5),
            1.7,
            (0.2, 1.5),
        ),
        DoublyWarped::rescaled(
            models::flat_torus(2),
            models::hyperbolic_cylinder(),
            WarpFunction::cosh(),
            WarpFunction::sin_offset(1.5),
            0.8,
            (-1.0, 1.0),
        ),
    ]
    .into_iter()
    .map(|w| w.expect("valid configuration"))
    .collect()
}

/// Point and two metric-isotropic tangent vectors.
fn random_plane(chart: &ChartMetric, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let x = chart.domain().sample(rng, 0.05);
    let n = x.len();
    let lt = chart.eval(&x).cholesky().expect("positive definite").l().transpose();
    let mut draw = || {
        let c = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        lt.solve_upper_triangular(&c).unwrap().as_slice().to_vec()
    };
    let a = draw();
    let b = draw();
    (x, a, b)
}

fn oracle_equivalence() -> Check {
    let start = Instant::now();
    let mut frames = 0;
    let mut worst = 0.0_f64;
    for (i, w) in configurations().iter().enumerate() {
        let rep = oracle_check(w, 100, 11 + i as u64).map_err(err)?;
        ensure(!rep.max_error.is_nan(), format!("NaN in configuration {i}"))?;
        frames += rep.frames;
        worst = worst.max(rep.max_error);
    }
    ensure(frames >= 400, format!("{frames} frames"))?;
    ensure(worst <= 1e-5, format!("max |closed form - engine| = {worst:e}"))?;
    within(start.elapsed(), 60, "oracle")?;
    Ok(format!("{frames} frames, max error {worst:.2e}, {:.1?}", start.elapsed()))
}

fn structure_identities() -> Check {
    let cases = [
        DoublyWarped::new(models::unit_sphere(), models::flat_circle(), WarpFunction::sin_offset(2.0), WarpFunction::exp(), (-2.0, 2.0)),
        DoublyWarped::new(models::hyperbolic_half_plane(), models::flat_circle(), WarpFunction::cosh(), WarpFunction::exp_combination(0.5), (0.2, 2.0)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut eig_err, mut conn_err, mut koszul) = (0.0_f64, 0.0_f64, 0.0_f64);
    for w in cases {
        let w = w.map_err(err)?;
        ensure(w.chart().scheme() == DerivativeScheme::ForwardMode, "test metric is not in forward mode")?;
        let k_factor = match w.k1 {
            FactorCurvature::Constant(k) => k,
            FactorCurvature::Oracle => return Err("factor curvature is not constant".into()),
        };
        let dims = w.dims();
        let e = |v: TaggedVector| tagged_to_chart(dims, &v);
        let du = |i: usize| TaggedVector::U(DVector::from_fn(2, |k, _| (k == i) as u8 as f64));
        let dv = || TaggedVector::V(DVector::from_vec(vec![1.0]));
        for _ in 0..10 {
            let x = w.chart().domain().sample(&mut rng, 0.05);
            let t = x[3];
            let op = curvature_operator_at(w.chart(), &x).map_err(err)?;
            let forms = [
                (e(TaggedVector::Dt), e(du(0)), TwoFormType::DtU),
                (e(TaggedVector::Dt), e(du(1)), TwoFormType::DtU),
                (e(TaggedVector::Dt), e(dv()), TwoFormType::DtV),
                (e(du(0)), e(dv()), TwoFormType::UV),
                (e(du(1)), e(dv()), TwoFormType::UV),
                (e(du(0)), e(du(1)), TwoFormType::UU),
            ];
            let mut predicted = Vec::new();
            for (a, b, ty) in forms {
                let wedge = op.wedge(a.as_slice(), b.as_slice());
                let lambda = warped_curvature_images(&w.phi1, &w.phi2, t, ty).eigenvalue(k_factor);
                let image = op.apply(&wedge);
                eig_err = eig_err.max((image - &wedge * lambda).amax() / wedge.amax());
                predicted.push(lambda);
            }
            predicted.sort_by(f64::total_cmp);
            for ((ev, _), p) in op.eigen().iter().zip(&predicted) {
                eig_err = eig_err.max((ev - p).abs());
            }

            let u1 = TaggedVector::U(DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)));
            let u2 = TaggedVector::U(DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)));
            let v = TaggedVector::V(DVector::from_vec(vec![rng.random_range(-1.0..1.0)]));
            for (p, q) in [
                (TaggedVector::Dt, TaggedVector::Dt),
                (TaggedVector::Dt, u1.clone()),
                (u2.clone(), TaggedVector::Dt),
                (TaggedVector::Dt, v.clone()),
                (v.clone(), TaggedVector::Dt),
                (u1.clone(), u2.clone()),
                (u1.clone(), v.clone()),
                (v.clone(), u2.clone()),
                (v.clone(), v.clone()),
            ] {
                let closed = w.warped_connection_terms(&x, &p, &q).map_err(err)?;
                let engine = w.engine_connection(&x, &p, &q).map_err(err)?;
                conn_err = conn_err.max((closed - engine).amax());
            }
            koszul = koszul.max(koszul_residual(w.chart(), &x).map_err(err)?);
        }
    }
    ensure(eig_err <= 1e-5, format!("eigen-pair error {eig_err:e}"))?;
    ensure(conn_err <= 1e-5, format!("connection error {conn_err:e}"))?;
    ensure(koszul <= 1e-7, format!("Koszul residual {koszul:e}"))?;
    Ok(format!("eigen {eig_err:.1e}, connection {conn_err:.1e}, Koszul {koszul:.1e}"))
}

fn convexity() -> Check {
    let mut worst_sum = 0.0_f64;
    let mut min_weight = f64::INFINITY;
    let mut outside = 0;
    let mut frames = 0;
    for (i, w) in configurations().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + i as u64);
        for _ in 0..250 {
            let (x, a, b) = random_plane(w.chart(), &mut rng);
            let (weights, terms) = w.decomposition(&x, &a, &b).map_err(err)?;
            worst_sum = worst_sum.max((weights.iter().sum::<f64>() - 1.0).abs());
            min_weight = weights.iter().cloned().fold(min_weight, f64::min);
            let active = terms.iter().zip(&weights).filter(|(t, &wt)| !t.is_nan() || wt != 0.0).map(|(t, _)| *t);
            let (lo, hi) = active.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), t| (lo.min(t), hi.max(t)));
            let closed = w.closed_form_K(&x, &a, &b).map_err(err)?;
            let engine = riemann_at(w.chart(), &x).map_err(err)?.sectional(&a, &b).map_err(err)?;
            let slack = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
            if !(closed >= lo - slack && closed <= hi + slack) || !(engine >= lo - 1e-5 && engine <= hi + 1e-5) {
                outside += 1;
            }
            frames += 1;
        }
    }
    ensure(worst_sum <= 1e-10, format!("weight sum off by {worst_sum:e}"))?;
    ensure(min_weight >= -1e-12, format!("negative weight {min_weight:e}"))?;
    ensure(outside == 0, format!("{outside} of {frames} samples outside the term bracket"))?;
    Ok(format!("{frames} frames, |sum - 1| <= {worst_sum:.1e}, min weight {min_weight:.1e}, all K bracketed"))
}

fn calibration() -> Check {
    let random = |target: (f64, f64)| SamplingSpec::new(target).with_points(100).with_planes(1).with_seed(4);
    let tube = DoublyWarped::new(models::hyperbolic_half_plane(), models::flat_circle(), WarpFunction::cosh(), WarpFunction::sinh(), (0.3, 3.0))
        .map_err(err)?;
    let rho = build_rho_r(12.0, &models::hyperbolic_half_plane()).map_err(err)?;
    let cases: [(&str, ChartMetric, (f64, f64)); 5] = [
        ("tube", tube.chart().clone(), (-1.0 - 1e-5, -1.0 + 1e-5)),
        ("rho_12", rho, (-1.0 - 1e-5, -1.0 + 1e-5)),
        ("sphere", models::unit_sphere(), (1.0 - 1e-5, 1.0 + 1e-5)),
        ("torus2", models::flat_torus(2), (-1e-6, 1e-6)),
        ("torus3", models::flat_torus(3), (-1e-6, 1e-6)),
    ];
    let mut parts = Vec::new();
    for (name, m, target) in cases {
        let rep = curvature_range(&m, &random(target), 0.0).map_err(err)?;
        ensure(rep.samples_taken == 100, format!("{name}: {} samples", rep.samples_taken))?;
        ensure(rep.verdict.is_pass(), format!("{name}: range [{}, {}]", rep.k_min, rep.k_max))?;
        parts.push(format!("{name} [{:.7}, {:.7}]", rep.k_min, rep.k_max));
    }
    Ok(parts.join(", "))
}

fn lemma_realization() -> Check {
    let exp = WarpFamily::fixed("exp", WarpFunction::exp(), WarpFunction::exp(), (1.0, 2.0), Some((-1.0, 1.0)), Some((-1.0, 1.0)))
        .map_err(err)?;
    let eps = 0.1;
    let step = 0.01;
    let a0 = find_alpha0(&exp, eps, &arithmetic_grid(step, step, 500), T_SAMPLES)
        .map_err(err)?
        .alpha0
        .ok_or("no alpha0 for the exp family")?;
    // the K-terms are K e^{-2αt} - 1, worst at t = a: e^{-2α} < ε
    let analytic = (1.0 / eps).ln() / 2.0;
    ensure((a0 - 1.16).abs() <= 0.01, format!("alpha0 = {a0}"))?;
    ensure(a0 > analytic && a0 - analytic <= step + 1e-12, format!("alpha0 = {a0}, analytic {analytic}"))?;

    let tube = WarpFamily::fixed("tube", WarpFunction::cosh(), WarpFunction::sinh(), (0.5, 1.0), Some((-1.0, -1.0)), None).map_err(err)?;
    let grid = geometric_grid(0.1, 1.1, 40);
    let first = find_alpha0(&tube, eps, &grid, T_SAMPLES).map_err(err)?.alpha0;
    ensure(first == Some(grid[0]), format!("tube alpha0 {first:?}"))?;

    let (s1, s2) = (models::hyperbolic_half_plane(), models::flat_circle());
    let (p1, p2) = (WarpFunction::exp(), WarpFunction::exp_combination(0.5));
    let mut worst = 0.0_f64;
    for alpha in [0.5, 2.5, 7.0] {
        let rescaled = assemble_rescaled(&s1, &s2, &p1, &p2, alpha, (0.4, 1.0)).map_err(err)?;
        let plain = assemble_rescaled(&s1, &s2, &p1, &p2, 1.0, (0.4 * alpha, alpha)).map_err(err)?;
        let base = SamplingSpec::pinched(10.0).with_points(32).with_planes(8).with_seed(3);
        let a = curvature_range(&rescaled, &base.clone().with_intervals(vec![(0.4, 1.0)], vec![]), alpha).map_err(err)?;
        let b = curvature_range(&plain, &base.with_intervals(vec![(0.4 * alpha, alpha)], vec![]), 1.0).map_err(err)?;
        for (x, y) in a.samples.iter().zip(&b.samples) {
            worst = worst.max((x.k - y.k).abs());
        }
    }
    ensure(worst <= 1e-6, format!("rescaling mismatch {worst:e}"))?;
    Ok(format!("alpha0 = {a0} (analytic {analytic:.4}), tube alpha0 = {}, rescaling {worst:.1e}", grid[0]))
}

fn metric_families() -> Check {
    let start = Instant::now();
    let n = models::hyperbolic_cylinder();
    let local = GluingMap::LocalRotation {
        angle: 0.8,
        center: vec![3.0, 0.0],
        radius: 1.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rho = build_rho_r(12.0, &n).map_err(err)?;
    let mut continuity = 0.0_f64;
    for twist in [GluingMap::Identity, GluingMap::Rotation { angle: 0.4 }, local] {
        let iso = TwistIsotopy::new(twist.clone());
        let one = build_lambda_r_s(12.0, 1.0, &iso, &n, 0.1).map_err(err)?;
        for _ in 0..200 {
            let x = rho.domain().sample(&mut rng, 0.0);
            ensure(one.eval(&x) == rho.eval(&x), format!("(lambda_r)_1 differs from rho_r at {x:?} for {twist:?}"))?;
        }
        for s in [0.0, 0.1, 0.25, 0.49, 0.5, 0.75, 0.9, 1.0] {
            let m = build_lambda_r_s(12.0, s, &iso, &n, 0.1).map_err(err)?;
            let rep = breakpoint_smoothness(&m, 2);
            ensure(rep.pass, format!("smoothness fails at s = {s} for {twist:?}"))?;
            for ds in [-1e-7, 1e-7] {
                if !(0.0..=1.0).contains(&(s + ds)) {
                    continue;
                }
                let near = build_lambda_r_s(12.0, s + ds, &iso, &n, 0.1).map_err(err)?;
                for _ in 0..20 {
                    let x = rho.domain().sample(&mut rng, 0.0);
                    let g = m.eval(&x);
                    continuity = continuity.max((near.eval(&x) - &g).amax() / g.amax());
                }
            }
        }
    }
    ensure(continuity <= 1e-5, format!("relative jump {continuity:e} for |ds| = 1e-7"))?;

    let sigma = models::hyperbolic_half_plane();
    let iso = TwistIsotopy::new(GluingMap::Identity);
    let builder = |r: f64, s: f64| build_lambda_r_s(r, s, &iso, &sigma, 0.1).map(|m| m.chart());
    let spec = SamplingSpec::pinched(0.2).with_intervals(vec![(0.25, 2.0), (2.0, 3.0), (3.0, 4.0), (4.0, 5.0), (5.0, 6.0)], BREAKPOINTS.to_vec());
    let rep = find_min_r(&builder, 0.2, &geometric_grid(3.0, 1.1, 16), &spec, &[0.0, 0.25, 0.5, 0.75, 1.0]).map_err(err)?;
    let r_star = rep.r_star.ok_or("no grid r with the range inside (-1.2, -0.8)")?;
    let cell = rep.cells.iter().filter(|c| c.r == r_star).all(|c| c.k_min > -1.2 && c.k_max < -0.8);
    ensure(cell, "r* cells not inside")?;
    ensure(rep.monotone, "worst deviation is not non-increasing in r")?;
    within(start.elapsed(), 600, "family sweep")?;
    Ok(format!("exact at s = 1, continuity {continuity:.1e}, r* = {r_star:.3}, monotone, {:.1?}", start.elapsed()))
}

fn heat_flow() -> Check {
    let torus = ClosedCurve::from_fn(models::flat_torus(2), 256, vec![1, 0], |th| vec![th + 0.3 * (2.0 * th).sin(), 0.3 * th.sin()]).map_err(err)?;
    let cylinder = ClosedCurve::from_fn(models::hyperbolic_cylinder(), 256, vec![1, 0], |th| vec![th, 0.5]).map_err(err)?;
    let mut parts = Vec::new();
    for (name, c) in [("torus", torus), ("cylinder", cylinder)] {
        let start = Instant::now();
        // an Err here would include a winding change at some step
        let (lim, trace) = flow_until(&c, 1e-6, 200_000).map_err(err)?;
        let e = trace.final_energy();
        ensure(trace.status == FlowStatus::Converged, format!("{name}: {:?}", trace.status))?;
        ensure((e - PI).abs() <= 1e-3, format!("{name}: final energy {e}"))?;
        ensure(trace.energy_monotone(1e-12), format!("{name}: energy not monotone"))?;
        ensure(lim.measured_winding() == vec![1, 0], format!("{name}: winding {:?}", lim.measured_winding()))?;
        if name == "cylinder" {
            let off = lim.samples().iter().map(|x| x[1].abs()).fold(0.0, f64::max);
            ensure(off <= 1e-3, format!("cylinder: distance from core {off}"))?;
        }
        within(start.elapsed(), 60, name)?;
        parts.push(format!("{name} E = {e:.6} in {} steps, {:.1?}", trace.records.len() - 1, start.elapsed()));
    }
    Ok(parts.join("; "))
}

const CLI_CONFIGS: [(&str, &str, &str); 7] = [
    ("curvature-sweep", "sweep", r#"{"metric": {"kind": "model", "model": {"model": "sphere"}}, "target": [0.99, 1.01], "sampling": {"random_points": 40}}"#),
    (
        "pinch-find",
        "alpha0",
        r#"{"search": "alpha0", "phi1": {"kind": "exp"}, "phi2": {"kind": "exp"}, "t_interval": [1.0, 2.0],
            "k1_bounds": [-1.0, 1.0], "k2_bounds": [-1.0, 1.0], "epsilon": 0.1,
            "alpha_grid": {"kind": "arithmetic", "start": 0.01, "step": 0.01, "count": 200}}"#,
    ),
    (
        "pinch-find",
        "min_r",
        r#"{"search": "min_r", "factor": {"model": "hyperbolic_half_space", "dim": 2}, "twist": {"kind": "identity"},
            "epsilon": 0.2, "r_grid": {"kind": "explicit", "values": [4.0, 8.0]}, "s_samples": [0.0, 1.0],
            "sampling": {"points_per_interval": 8, "planes_per_point": 4}}"#,
    ),
    ("family-check", "rho", r#"{"family": {"kind": "rho_r", "r": 12.0, "factor": {"model": "hyperbolic_half_space", "dim": 2}}, "epsilon": 1e-4, "sampling": {"points_per_interval": 16}}"#),
    (
        "family-check",
        "twisted",
        r#"{"family": {"kind": "lambda_r_s", "r": 12.0, "s": 0.3, "factor": {"model": "hyperbolic_cylinder"},
            "twist": {"kind": "local_rotation", "angle": 0.8, "center": [3.0, 0.0], "radius": 1.0}},
            "epsilon": 0.5, "sampling": {"points_per_interval": 8, "planes_per_point": 4}}"#,
    ),
    ("heatflow", "flow", r#"{"target": "hyperbolic_cylinder", "npts": 32, "winding": [1, 0], "offset": [0.0, 0.3], "tol": 1e-5}"#),
    (
        "oracle-check",
        "oracle",
        r#"{"configs": [{"factor1": {"model": "sphere"}, "factor2": {"model": "circle"}, "phi1": {"kind": "sin_offset", "offset": 2.0},
            "phi2": {"kind": "exp"}, "t_domain": [-2.0, 2.0]}], "frames_per_config": 20}"#,
    ),
];

fn run_cli(command: &str, config: &Path, out: &Path) -> Result<i32, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_warpcurv"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--seed")
        .arg("17")
        .output()
        .map_err(err)?;
    status.status.code().ok_or_else(|| "killed by a signal".to_string())
}

/// Report without its timestamp, plus every CSV, in name order.
fn outputs(dir: &Path) -> Result<Outputs, String> {
    let mut report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("report.json")).map_err(err)?).map_err(err)?;
    report.as_object_mut().ok_or("report is not an object")?.remove("timestamp").ok_or("no timestamp")?;
    let mut csvs = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(err)? {
        let p = entry.map_err(err)?.path();
        if p.extension().is_some_and(|e| e == "csv") {
            csvs.push((p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).map_err(err)?));
        }
    }
    csvs.sort();
    Ok((report, csvs))
}

fn reproducibility() -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut commands = Vec::new();
    for (command, label, text) in CLI_CONFIGS {
        let config = tmp.path().join(format!("{label}.json"));
        std::fs::write(&config, text).map_err(err)?;
        let (a, b) = (tmp.path().join(format!("{label}-a")), tmp.path().join(format!("{label}-b")));
        let codes = (run_cli(command, &config, &a)?, run_cli(command, &config, &b)?);
        ensure(codes.0 == codes.1 && codes.0 != 1, format!("{command} {label}: exit codes {codes:?}"))?;
        let (ra, ca) = outputs(&a)?;
        let (rb, cb) = outputs(&b)?;
        ensure(ra["seed"] == 17, format!("{command} {label}: seed override ignored"))?;
        ensure(ra == rb, format!("{command} {label}: reports differ"))?;
        ensure(!ca.is_empty() && ca == cb, format!("{command} {label}: CSV outputs differ"))?;
        commands.push(format!("{command}/{label}"));
    }
    Ok(format!("identical re-runs for {}", commands.join(", ")))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("curvature operator, connection and Koszul identities", structure_identities),
        ("convex combination", convexity),
        ("constant-curvature calibration", calibration),
        ("pinching threshold and rescaling", lemma_realization),
        ("metric families", metric_families),
        ("heat flow", heat_flow),
        ("CLI reproducibility", reproducibility),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                println!("criterion {} {name}: FAIL ({why})", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 8 criteria pass");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
