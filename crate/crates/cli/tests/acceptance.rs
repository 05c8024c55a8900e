//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs the full reference scenario nine times, so expect it to take a while
//! on few cores. Exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rodd::bench::{generate_instance, run_trial, BenchConfig};
use rodd::channel::Observation;
use rodd::decoder::{refine_amplitudes, DecoderConfig};
use rodd::geometry::in_convex_hull;
use rodd::locator::{hinge_objective, solve_location, RangeConstraint, SolverOptions};
use rodd::netmodel::{self, montecarlo, Role};
use rodd::sim::{run_simulation, SimConfig, SimOutput};
use rodd::{rng, Point};

const SEEDS: [u64; 3] = [1, 2, 3];

// thresholds
const HULL_MEDIAN_M: f64 = 1.0;
const CI_BUDGET: Duration = Duration::from_secs(180);
const CONVERGENCE_RATIO: f64 = 0.25;
const LOW_SNR_FACTOR: f64 = 2.0;
const HIGH_SNR_FACTOR: f64 = 0.5;
const DEGREE_TOL: f64 = 0.03;
const INTERFERENCE_TOL: f64 = 0.05;
const KS_TOL: f64 = 0.01;
const ORACLE_AGREEMENT: f64 = 0.95;
const LS_REL_TOL: f64 = 1e-6;
const GRID_TOL: f64 = 1e-3;
const TRIANGLE_TOL: f64 = 1e-2;
const BUDGET_SYMBOLS: usize = 12_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn run(cfg: &SimConfig) -> SimOutput {
    let start = Instant::now();
    let out = run_simulation(cfg).expect("simulation runs");
    eprintln!(
        "  ran seed {} at {} dB in {:.0} s: final average error {:.3} m",
        cfg.run_seed,
        cfg.snr_db,
        start.elapsed().as_secs_f64(),
        out.final_average_error()
    );
    out
}

fn hull_median(out: &SimOutput) -> f64 {
    let anchors: Vec<Point> = out.nodes.iter().filter(|n| n.role == Role::Anchor).map(|n| n.truth).collect();
    median(
        out.nodes
            .iter()
            .filter(|n| n.role == Role::Client && in_convex_hull(n.truth, &anchors))
            .map(|n| n.error)
            .collect(),
    )
}

fn criterion_1(reference: &[SimOutput], ci_time: Duration, ci_error: f64) -> Outcome {
    let medians: Vec<f64> = reference.iter().map(hull_median).collect();
    let avg = mean(&medians);
    let pass = avg <= HULL_MEDIAN_M && ci_time <= CI_BUDGET;
    outcome(
        pass,
        format!(
            "hull-interior median error {avg:.3} m over seeds (per seed {:?}, limit {HULL_MEDIAN_M} m); \
             ci profile {:.0} s (limit {} s, final error {ci_error:.3} m)",
            medians.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>(),
            ci_time.as_secs_f64(),
            CI_BUDGET.as_secs()
        ),
    )
}

fn criterion_2(reference: &[SimOutput]) -> Outcome {
    let ratios: Vec<f64> =
        reference.iter().map(|o| o.final_average_error() / o.records[0].average_error).collect();
    let pass = ratios.iter().all(|&r| r <= CONVERGENCE_RATIO);
    outcome(
        pass,
        format!(
            "final / first-iteration average error per seed {:?} (limit {CONVERGENCE_RATIO})",
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_3(reference: &[SimOutput], stage1: usize) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for out in reference {
        let counts: Vec<usize> = out.records.iter().map(|r| r.count_within_1m).collect();
        let first = counts[0];
        let end1 = counts[stage1 - 1];
        let peak1 = *counts[..stage1].iter().max().unwrap();
        let last = *counts.last().unwrap();
        let dip = counts[stage1..].iter().min().copied().unwrap_or(last);
        pass &= end1 >= first && last >= peak1;
        parts.push(format!(
            "first {first}, end of stage 1 {end1}, stage-1 peak {peak1}, stage-2 low {dip}, final {last}{}",
            if dip < peak1 && last > dip { " (rise, dip, recover)" } else { "" }
        ));
    }
    outcome(pass, format!("clients within 1 m: {}", parts.join("; ")))
}

fn criterion_4(at30: f64, at10: f64, at50: f64) -> Outcome {
    let pass = at10 >= LOW_SNR_FACTOR * at30 && at50 >= HIGH_SNR_FACTOR * at30;
    outcome(
        pass,
        format!(
            "mean final error 10 dB {at10:.3} m, 30 dB {at30:.3} m, 50 dB {at50:.3} m \
             (need 10 dB >= {LOW_SNR_FACTOR} x 30 dB and 50 dB >= {HIGH_SNR_FACTOR} x 30 dB)"
        ),
    )
}

fn criterion_5() -> Outcome {
    let (lambda, theta, alpha, q, snr) = (0.04, 1e-3, 3.0, 0.5, 1000.0);
    let exact_degree = netmodel::mean_neighbor_count(lambda, theta, alpha);
    let exact_interference = netmodel::interference_variance(lambda, q, snr, theta, alpha).unwrap() - 1.0;
    let radius = montecarlo::boundary_free_radius(theta, alpha);
    let sample = montecarlo::sample_degree(lambda, theta, alpha, radius, 10_000, 1);
    let interference = montecarlo::sample_interference(lambda, q, snr, theta, alpha, radius, 50.0 * radius, 10_000, 10, 1);
    let ks = montecarlo::ks_distance(&sample.amplitudes, |u| netmodel::neighbor_amplitude_cdf(u, theta, alpha));
    let d_rel = (sample.mean_degree - exact_degree).abs() / exact_degree;
    let i_rel = (interference - exact_interference).abs() / exact_interference;
    let pass = d_rel <= DEGREE_TOL && i_rel <= INTERFERENCE_TOL && ks < KS_TOL && sample.amplitudes.len() >= 100_000;
    outcome(
        pass,
        format!(
            "degree {:.4} vs {exact_degree:.4} ({:.2}%), interference {interference:.4} vs {exact_interference:.4} ({:.2}%), \
             KS {ks:.5} over {} amplitudes",
            sample.mean_degree,
            100.0 * d_rel,
            100.0 * i_rel,
            sample.amplitudes.len()
        ),
    )
}

/// Normal-equations least squares on the support columns, solved densely.
fn dense_ls(obs: &Observation, support: &[usize]) -> Vec<Complex64> {
    let block = obs.block_size();
    let scale = obs.gamma_s.sqrt() * obs.column_scale();
    let a = DMatrix::from_fn(obs.rows(), support.len(), |mu, b| obs.entry(mu, b * block + support[b]) as f64 * scale);
    let gram = a.transpose() * &a;
    let lu = gram.lu();
    let re = lu.solve(&(a.transpose() * DVector::from_iterator(obs.rows(), obs.received.iter().map(|y| y.re)))).unwrap();
    let im = lu.solve(&(a.transpose() * DVector::from_iterator(obs.rows(), obs.received.iter().map(|y| y.im)))).unwrap();
    re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect()
}

fn criterion_6() -> Outcome {
    let dec = DecoderConfig::default();
    let trials = 500u64;
    let (mut agree, mut min_gamma) = (0, f64::INFINITY);
    let mut worst_ls = 0.0f64;
    for s in 0..trials {
        let mut r = rng::stream(&[s, 0xacce]);
        let cfg = BenchConfig { snr_db: r.gen_range(15.0..40.0), ..BenchConfig::small(r.gen_range(1..=3), r.gen_range(1..=3)) };
        let inst = generate_instance(&cfg, s).unwrap();
        min_gamma = min_gamma.min(inst.observation.gamma_s);
        if run_trial(&cfg, &dec, s, true).unwrap().oracle_agrees == Some(true) {
            agree += 1;
        }
        let support: Vec<usize> = inst.messages.clone();
        let refined = refine_amplitudes(&inst.observation, &support.iter().map(|&m| Some(m)).collect::<Vec<_>>()).unwrap();
        if !refined.fallback {
            for (a, b) in refined.amplitudes.iter().zip(dense_ls(&inst.observation, &support)) {
                worst_ls = worst_ls.max((a - b).norm() / b.norm().max(f64::MIN_POSITIVE));
            }
        }
    }
    let rate = agree as f64 / trials as f64;
    outcome(
        rate >= ORACLE_AGREEMENT && min_gamma >= 100.0 && worst_ls <= LS_REL_TOL,
        format!(
            "support agrees with exhaustive search on {agree}/{trials} (need {:.0}%, min effective SNR {min_gamma:.0}); \
             amplitude refinement vs dense least squares max relative error {worst_ls:.2e} (limit {LS_REL_TOL:e})",
            100.0 * ORACLE_AGREEMENT
        ),
    )
}

fn grid_scan(cs: &[RangeConstraint], lo: Point, hi: Point, step: f64) -> (Point, f64) {
    let nx = ((hi.x - lo.x) / step).ceil() as usize;
    let ny = ((hi.y - lo.y) / step).ceil() as usize;
    let mut best = (lo, f64::INFINITY);
    for i in 0..=nx {
        for j in 0..=ny {
            let p = Point::new(lo.x + i as f64 * step, lo.y + j as f64 * step);
            let v = hinge_objective(p, cs);
            if v < best.1 {
                best = (p, v);
            }
        }
    }
    best
}

/// Coarse-to-fine search ending on a 1e-3 lattice.
fn grid_minimum(cs: &[RangeConstraint]) -> (Point, f64) {
    let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for c in cs {
        let p = c.neighbor_position;
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let mut best = grid_scan(cs, lo, hi, 0.1);
    for (half, step) in [(0.3, 0.01), (0.03, 0.001)] {
        let c = best.0;
        best = grid_scan(cs, Point::new(c.x - half, c.y - half), Point::new(c.x + half, c.y + half), step);
    }
    best
}

fn criterion_7() -> Outcome {
    let opts = SolverOptions::default();
    let mut failures = 0;
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut r = rng::stream(&[seed, 0x7]);
        let truth = Point::new(r.gen_range(10.0..40.0), r.gen_range(10.0..40.0));
        let cs: Vec<RangeConstraint> = (0..r.gen_range(3..=9))
            .map(|_| {
                let d = 10.0 * r.gen::<f64>().sqrt().max(0.05);
                let phi = r.gen_range(0.0..std::f64::consts::TAU);
                RangeConstraint::new(truth + Point::new(d * phi.cos(), d * phi.sin()), d * r.gen_range(0.85..1.15))
            })
            .collect();
        let centers: Vec<Point> = cs.iter().map(|c| c.neighbor_position).collect();
        let est = solve_location(&cs, Point::centroid(&centers).unwrap(), &opts).unwrap();
        let gap = (est.objective_value - grid_minimum(&cs).1).abs();
        worst = worst.max(gap);
        if gap > GRID_TOL {
            failures += 1;
        }
    }
    let truth = Point::new(3.0, 4.0);
    let tri: Vec<RangeConstraint> = [Point::new(0.0, 0.0), Point::new(10.0, 0.0), Point::new(0.0, 10.0)]
        .into_iter()
        .map(|p| RangeConstraint::new(p, p.dist(truth)))
        .collect();
    let fix = solve_location(&tri, Point::centroid(&[tri[0].neighbor_position, tri[1].neighbor_position, tri[2].neighbor_position]).unwrap(), &opts)
        .unwrap()
        .position;
    let miss = fix.dist(truth);
    outcome(
        failures == 0 && miss <= TRIANGLE_TOL,
        format!(
            "{failures}/100 instances with |solver - grid| > {GRID_TOL:e} (largest {worst:.2e}); \
             triangle instance lands {miss:.2e} m from (3,4) (limit {TRIANGLE_TOL:e})"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut cfg = SimConfig::default();
    cfg.network.node_count = 20;
    cfg.bits = 3;
    cfg.total_iterations = 10;
    let out = run_simulation(&cfg).unwrap();
    outcome(
        out.symbols_elapsed == BUDGET_SYMBOLS,
        format!("{} iterations at M_s = {} used {} symbol intervals (expected {BUDGET_SYMBOLS})", out.records.len(), cfg.frame_length, out.symbols_elapsed),
    )
}

fn rodd(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_rodd"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> bool {
    names.iter().all(|n| match (std::fs::read(a.join(n)), std::fs::read(b.join(n))) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    })
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::TempDir::new().unwrap();
    let scenario = tmp.path().join("scenario.json");
    std::fs::write(
        &scenario,
        r#"{ "network": { "area_side": 30.0, "node_count": 30 }, "bits": 4, "frame_length": 96,
             "stage1_iterations": 2, "total_iterations": 4, "repetitions": 2 }"#,
    )
    .unwrap();
    let cfg = scenario.to_str().unwrap();
    let mut checked = Vec::new();
    let mut pass = true;
    for run in ["a", "b"] {
        let d = tmp.path().join(run);
        let d = d.to_str().unwrap();
        pass &= rodd(&["simulate", "--config", cfg, "--out-dir", &format!("{d}/sim"), "--seed", "7"]);
        pass &= rodd(&["sweep-snr", "--config", cfg, "--out-dir", &format!("{d}/sweep"), "--snr-db", "10:30:20", "--seeds", "2"]);
        pass &= rodd(&["decode-bench", "--users", "3", "--bits", "3", "--frame-length", "32", "--trials", "20", "--oracle", "--out-dir", &format!("{d}/bench")]);
    }
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for (sub, files) in [
        ("sim/rep-000", &["iterations.csv", "nodes.csv"][..]),
        ("sim/rep-001", &["iterations.csv", "nodes.csv"][..]),
        ("sweep", &["sweep.csv"][..]),
        ("bench", &["bench.csv"][..]),
    ] {
        let same = same_files(&a.join(sub), &b.join(sub), files);
        pass &= same;
        checked.push(format!("{sub} {}", if same { "identical" } else { "DIFFER" }));
    }
    outcome(pass, format!("repeated runs: {}", checked.join(", ")))
}

fn main() {
    let start = Instant::now();
    let mut results: Vec<(usize, Outcome)> = Vec::new();

    eprintln!("cheap criteria");
    results.push((5, criterion_5()));
    results.push((6, criterion_6()));
    results.push((7, criterion_7()));
    results.push((8, criterion_8()));
    results.push((9, criterion_9()));

    eprintln!("ci profile");
    let t = Instant::now();
    let ci = run(&SimConfig::ci_profile());
    let ci_time = t.elapsed();

    eprintln!("reference scenario at 30 dB");
    let reference: Vec<SimOutput> = SEEDS.iter().map(|&s| run(&SimConfig::default().with_seed(s))).collect();
    let stage1 = SimConfig::default().stage1_iterations;
    results.push((1, criterion_1(&reference, ci_time, ci.final_average_error())));
    results.push((2, criterion_2(&reference)));
    results.push((3, criterion_3(&reference, stage1)));

    eprintln!("reference scenario at 10 and 50 dB");
    let at = |snr_db: f64| -> f64 {
        mean(&SEEDS.iter().map(|&s| run(&SimConfig { snr_db, ..SimConfig::default() }.with_seed(s)).final_average_error()).collect::<Vec<_>>())
    };
    let at30 = mean(&reference.iter().map(|o| o.final_average_error()).collect::<Vec<_>>());
    let (at10, at50) = (at(10.0), at(50.0));
    results.push((4, criterion_4(at30, at10, at50)));

    results.sort_by_key(|r| r.0);
    println!("acceptance ({:.0} s)", start.elapsed().as_secs_f64());
    for (n, o) in &results {
        println!("criterion {n}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("all {} criteria pass", results.len());
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
