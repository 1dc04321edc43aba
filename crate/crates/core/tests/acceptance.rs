//! Acceptance gate: one test per shipping criterion, each printing a
//! single PASS or FAIL line with the measured numbers.
//!
//! Heavy artifacts are shared: the randomized closed-loop batch feeds
//! both the estimator-containment and the scheduler-invariant checks,
//! and the benchmark reference runs feed the reproduction, stability,
//! and runtime checks. Everything is seeded, so reruns see identical
//! numbers.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, dmatrix, dvector};
use once_cell::sync::Lazy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zonomax_core::mpc::verify_terminal_assumption;
use zonomax_core::set::{
    HalfSpacePolytope, IntervalMatrix, Strip, Zonotope, centered_inclusion, zonotope_inclusion,
};
use zonomax_core::sim::{
    Mode, ProfileKind, ProfileSpec, RunResult, SimConfig, metrics_to_text, run_closed_loop,
    setup, trace_to_csv,
};
use zonomax_core::uncertainty::UncertaintyModel;

const TOL: f64 = 1e-9;

fn verdict(id: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "acceptance {id} ({name}): {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {id} ({name}) failed: {detail}");
}

// ---------------------------------------------------------------------
// shared artifacts

/// Light solver budget for the randomized batch; the properties under
/// test (containment, feasibility, the prefix-length rule) must hold at
/// any budget.
fn batch_config(seed: u64) -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.sim.steps = 30;
    cfg.sim.seed = seed;
    cfg.sim.profile = ProfileSpec::Named(ProfileKind::Random);
    cfg.search.starts = 2;
    cfg.search.max_iters = 250;
    cfg.search.tol = 1e-5;
    cfg.search.branch_depth = 1;
    cfg
}

static BATCH: Lazy<Vec<RunResult>> = Lazy::new(|| {
    (0..100)
        .map(|seed| {
            run_closed_loop(&batch_config(seed)).unwrap_or_else(|e| {
                panic!("batch run with seed {seed} errored: {e}");
            })
        })
        .collect()
});

/// Benchmark runs at default settings: adaptive and robust, plus the
/// wall time the pair took.
static REFERENCE: Lazy<(RunResult, RunResult, Duration)> = Lazy::new(|| {
    let start = Instant::now();
    let adaptive = run_closed_loop(&SimConfig::default()).expect("adaptive benchmark run");
    let mut robust_cfg = SimConfig::default();
    robust_cfg.sim.mode = Mode::Robust;
    let robust = run_closed_loop(&robust_cfg).expect("robust benchmark run");
    (adaptive, robust, start.elapsed())
});

// ---------------------------------------------------------------------
// 1: set-calculus soundness

fn random_zonotope(rng: &mut ChaCha8Rng, dim: usize, max_gens: usize) -> Zonotope {
    let gens = rng.gen_range(1..=max_gens);
    let center = DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0));
    let g = DMatrix::from_fn(dim, gens, |_, _| rng.gen_range(-1.0..1.0));
    Zonotope::new(center, g).unwrap()
}

fn random_dir(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    loop {
        let d = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0f64));
        if d.norm() > 1e-3 {
            return d;
        }
    }
}

#[test]
fn set_calculus_soundness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = 10_000usize;
    let mut violations = 0usize;

    // Minkowski sum: memberwise sums land inside, support is additive.
    for _ in 0..samples {
        let a = random_zonotope(&mut rng, 2, 4);
        let b = random_zonotope(&mut rng, 2, 4);
        let sum = a.minkowski_sum(&b).unwrap();
        let p = a.sample(&mut rng) + b.sample(&mut rng);
        if !sum.contains_point(&p, TOL) {
            violations += 1;
        }
        let d = random_dir(&mut rng, 2);
        if (sum.support(&d) - (a.support(&d) + b.support(&d))).abs() > TOL {
            violations += 1;
        }
    }

    // Linear map: mapped samples land inside, support transposes.
    for _ in 0..samples {
        let z = random_zonotope(&mut rng, 2, 5);
        let m = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.5..1.5));
        let img = z.linear_map(&m).unwrap();
        if !img.contains_point(&(&m * z.sample(&mut rng)), TOL) {
            violations += 1;
        }
        let d = random_dir(&mut rng, 2);
        if (img.support(&d) - z.support(&(m.transpose() * &d))).abs() > TOL {
            violations += 1;
        }
    }

    // Interval hull and membership.
    for _ in 0..samples {
        let z = random_zonotope(&mut rng, 3, 5);
        let x = z.sample(&mut rng);
        if !z.interval_hull().contains(&x, TOL) {
            violations += 1;
        }
        if !z.contains_point(&x, TOL) {
            violations += 1;
        }
        let d = random_dir(&mut rng, 3);
        if d.dot(&x) > z.support(&d) + TOL {
            violations += 1;
        }
    }

    // Strip refinement keeps every member point that satisfies the strip.
    for _ in 0..samples {
        let z = random_zonotope(&mut rng, 2, 4);
        let phi = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
        let y = &phi * z.center() + DVector::from_fn(2, |_, _| rng.gen_range(-0.3..0.3));
        let bound = zonomax_core::set::IntervalBox::symmetric(dvector![
            rng.gen_range(0.05..0.5),
            rng.gen_range(0.05..0.5)
        ])
        .unwrap();
        let strip = Strip::new(phi, y, bound).unwrap();
        let (refined, _) = z.intersect_strip(&strip).unwrap();
        let x = z.sample(&mut rng);
        if strip.contains(&x, 0.0) && !refined.contains_point(&x, TOL) {
            violations += 1;
        }
    }

    // Interval-matrix image of the unit cube stays in the block bound.
    for _ in 0..samples {
        let mid = DMatrix::from_fn(2, 3, |_, _| rng.gen_range(-1.0..1.0));
        let rad = DMatrix::from_fn(2, 3, |_, _| rng.gen_range(0.0..0.5));
        let im = IntervalMatrix::new(mid, rad).unwrap();
        let block = Zonotope::new(DVector::zeros(2), zonotope_inclusion(&im)).unwrap();
        let a = im.sample(&mut rng);
        let b = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0f64));
        if !block.contains_point(&(&a * &b), TOL) {
            violations += 1;
        }
    }

    // Centered inclusion of the drift map covers every realization.
    let model = UncertaintyModel::bounded_drift(dvector![0.15], dvector![0.008]).unwrap();
    for _ in 0..samples {
        let z = {
            let c = rng.gen_range(-0.1..0.1);
            let r = rng.gen_range(0.001..0.05);
            Zonotope::new(dvector![c], dmatrix![r]).unwrap()
        };
        let enclosure = centered_inclusion(&model.eta, &z, &model.m_set).unwrap();
        let v = z.sample(&mut rng);
        let delta = model.m_set.sample(&mut rng);
        if !enclosure.contains_point(&(v + delta), TOL) {
            violations += 1;
        }
    }

    let elapsed = started.elapsed();
    verdict(
        1,
        "set-calculus soundness",
        violations == 0 && elapsed < Duration::from_secs(30),
        &format!(
            "{violations} violations over 6 x {samples} sampled checks at tol {TOL:.0e} in {:.1}s",
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------
// 2: polytope decomposition

/// Random bounded polytope: 4 to 8 faces with angularly spread unit
/// normals (so it is bounded) pushed outward from a random center (so
/// it has interior).
fn random_polytope(rng: &mut ChaCha8Rng) -> (DMatrix<f64>, DVector<f64>) {
    let faces = rng.gen_range(4..=8);
    let center = dvector![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let mut a = DMatrix::zeros(faces, 2);
    let mut b = DVector::zeros(faces);
    for i in 0..faces {
        let spread = 0.8 * std::f64::consts::PI / faces as f64;
        let th = 2.0 * std::f64::consts::PI * i as f64 / faces as f64
            + rng.gen_range(-spread..spread);
        a[(i, 0)] = th.cos();
        a[(i, 1)] = th.sin();
        b[i] = a.row(i).transpose().dot(&center) + rng.gen_range(0.3..1.5);
    }
    (a, b)
}

/// All vertices of `{x : Ax <= b}` in 2-D by pairwise face intersection.
fn vertices_2d(a: &DMatrix<f64>, b: &DVector<f64>) -> Vec<DVector<f64>> {
    let mut verts: Vec<DVector<f64>> = Vec::new();
    let m = a.nrows();
    for i in 0..m {
        for j in i + 1..m {
            let det = a[(i, 0)] * a[(j, 1)] - a[(i, 1)] * a[(j, 0)];
            if det.abs() < 1e-10 {
                continue;
            }
            let x = dvector![
                (b[i] * a[(j, 1)] - b[j] * a[(i, 1)]) / det,
                (a[(i, 0)] * b[j] - a[(j, 0)] * b[i]) / det
            ];
            let inside = (0..m).all(|k| a.row(k).transpose().dot(&x) <= b[k] + 1e-9);
            if inside && !verts.iter().any(|v| (v - &x).norm() < 1e-9) {
                verts.push(x);
            }
        }
    }
    verts
}

#[test]
fn polytope_decomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut vertex_misses = 0usize;
    let mut sample_violations = 0usize;
    let mut sampled = 0usize;

    for _ in 0..20 {
        let (a, b) = random_polytope(&mut rng);
        let poly = HalfSpacePolytope::new(a.clone(), b.clone()).unwrap();
        let members = poly.to_zonotopes().unwrap();
        let verts = vertices_2d(&a, &b);
        assert!(verts.len() >= 3, "degenerate polytope in generator");

        for v in &verts {
            for m in members.members() {
                if !m.contains_point(v, 1e-6) {
                    vertex_misses += 1;
                }
            }
        }
        for _ in 0..500 {
            if let Some(x) = members.sample_rejection(&mut rng, 400) {
                sampled += 1;
                if !poly.contains(&x, 1e-6) {
                    sample_violations += 1;
                }
            }
        }
    }

    verdict(
        2,
        "polytope decomposition",
        vertex_misses == 0 && sample_violations == 0 && sampled >= 10_000 * 9 / 10,
        &format!(
            "20 polytopes: {vertex_misses} vertex misses, {sample_violations} half-space violations over {sampled} intersection samples"
        ),
    );
}

// ---------------------------------------------------------------------
// 3: estimator guaranteed containment

#[test]
fn estimator_containment() {
    let mut containment = 0usize;
    let mut tube = 0usize;
    let mut triggers = 0usize;
    for run in BATCH.iter() {
        containment += run.metrics.containment_failures;
        tube += run.metrics.tube_failures;
        triggers += run.metrics.trigger_count;
    }
    verdict(
        3,
        "estimator containment",
        containment == 0 && tube == 0,
        &format!(
            "100 randomized runs, {triggers} triggers: {containment} parameter-containment misses, {tube} tube misses"
        ),
    );
}

// ---------------------------------------------------------------------
// 4: scheduler invariants

#[test]
fn scheduler_invariants() {
    let mut aborts = 0usize;
    let mut h1_infeasible = 0usize;
    let mut value_rule = 0usize;
    let mut range = 0usize;
    let mut triggers = 0usize;
    for run in BATCH.iter() {
        if run.fault.is_some() {
            aborts += 1;
        }
        for log in &run.triggers {
            triggers += 1;
            if !log.h1_feasible {
                h1_infeasible += 1;
            }
            if log.value > log.value_h1 + 1e-9 {
                value_rule += 1;
            }
            if !(1..=5).contains(&log.h_star) {
                range += 1;
            }
        }
    }
    verdict(
        4,
        "scheduler invariants",
        aborts == 0 && h1_infeasible == 0 && value_rule == 0 && range == 0,
        &format!(
            "{triggers} triggers: {aborts} infeasibility aborts, {h1_infeasible} infeasible length-1 solves, {value_rule} value-rule breaches, {range} out-of-range prefixes"
        ),
    );
}

// ---------------------------------------------------------------------
// 5: benchmark reproduction

#[test]
fn benchmark_reproduction() {
    let (adaptive, robust, elapsed) = &*REFERENCE;
    let ja = adaptive.metrics.j_p;
    let sa = adaptive.metrics.average_sampling_time;
    let sr = robust.metrics.average_sampling_time;
    let violations = adaptive.metrics.constraint_violations + robust.metrics.constraint_violations;
    let pass = adaptive.fault.is_none()
        && robust.fault.is_none()
        && (9.4..=17.5).contains(&ja)
        && sa >= 1.8
        && sr <= sa
        && violations == 0
        && *elapsed < Duration::from_secs(600);
    verdict(
        5,
        "benchmark reproduction",
        pass,
        &format!(
            "J_p {ja:.4} in [9.4, 17.5], adaptive sampling {sa:.4} >= 1.8, robust {sr:.4} <= adaptive, {violations} constraint violations, {:.0}s < 600s",
            elapsed.as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------------
// 6: terminal ingredients

#[test]
fn terminal_ingredients() {
    let cfg = SimConfig::default();
    let s = setup(&cfg).unwrap();
    let report = verify_terminal_assumption(&s.plant, &s.term, &s.weights, 10_000, 0).unwrap();

    for f in &report.decrease_failures {
        println!(
            "acceptance 6 diagnostic: decrease fails at ({:.4}, {:.4}), worst parameter {:.3}, margin {:.4}",
            f.x[0], f.x[1], f.v[0], f.margin
        );
    }
    let frac = report.decrease_pass_fraction;
    verdict(
        6,
        "terminal ingredients",
        report.kappa_within_input_bounds
            && report.terminal_set_within_state_bounds
            && frac >= 0.99,
        &format!(
            "feedback bound {:.4} within limits: {}, set within state box: {}, decrease margin nonnegative at {:.2}% of 10000 boundary samples (need 99%), worst margin {:.4}",
            report.kappa_bound.amax(),
            report.kappa_within_input_bounds,
            report.terminal_set_within_state_bounds,
            100.0 * frac,
            report.decrease_worst_margin
        ),
    );
}

// ---------------------------------------------------------------------
// 7: stability proxy

#[test]
fn stability_proxy() {
    // Threshold derived from the reference run (observed max 0.2374 for
    // t >= 40) and frozen with headroom; the run is seeded, so the
    // number is reproducible.
    const THRESHOLD: f64 = 0.35;
    let (adaptive, _, _) = &*REFERENCE;
    let worst = adaptive
        .trace
        .iter()
        .filter(|r| r.t >= 40)
        .map(|r| r.x.amax())
        .fold(0.0f64, f64::max);
    verdict(
        7,
        "stability proxy",
        adaptive.trace.len() == 60 && worst <= THRESHOLD,
        &format!("max |x|_inf over t >= 40 is {worst:.4} <= {THRESHOLD}"),
    );
}

// ---------------------------------------------------------------------
// 8: determinism

#[test]
fn determinism() {
    let mut cfg = batch_config(17);
    cfg.sim.steps = 20;
    let a = run_closed_loop(&cfg).unwrap();
    let b = run_closed_loop(&cfg).unwrap();
    let trace_match = trace_to_csv(&a.trace).unwrap() == trace_to_csv(&b.trace).unwrap();
    let metrics_match = metrics_to_text(&a.metrics) == metrics_to_text(&b.metrics);
    verdict(
        8,
        "determinism",
        trace_match && metrics_match,
        &format!(
            "two identical-config runs: trace bytes match: {trace_match}, metrics bytes match: {metrics_match}"
        ),
    );
}
