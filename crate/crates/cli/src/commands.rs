use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use rayon::prelude::*;
use rodd::bench::{run_trial, BenchConfig, TrialResult};
use rodd::decoder::DecoderConfig;
use rodd::netmodel::{self, montecarlo, Role};
use rodd::sim::{run_simulation, SimConfig, SimOutput};

use crate::output::{ensure_dir, fmt6, write_atomic};
use crate::scenario::{ScenarioFile, SweepSpec};

#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Tolerance(String),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Tolerance(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => write!(f, "{e:#}"),
            Failure::Tolerance(msg) => f.write_str(msg),
        }
    }
}

/// Configuration problems surfacing from the library map to exit code 2.
fn from_core(e: rodd::Error) -> Failure {
    match e {
        rodd::Error::Config(_)
        | rodd::Error::DivergentInterference(_)
        | rodd::Error::OracleTooLarge(_)
        | rodd::Error::NonPositive(_)
        | rodd::Error::Json(_) => Failure::Config(e.into()),
        other => Failure::Runtime(other.into()),
    }
}

fn runtime(e: anyhow::Error) -> Failure {
    Failure::Runtime(e)
}

type CmdResult = std::result::Result<(), Failure>;

fn output_dir(flag: Option<PathBuf>, scenario: &ScenarioFile) -> Result<PathBuf, Failure> {
    flag.or_else(|| scenario.out_dir.clone())
        .ok_or_else(|| Failure::Config(anyhow!("no output directory: pass --out-dir or set out_dir")))
}

pub fn iterations_csv(out: &SimOutput) -> String {
    let mut s = String::from("iteration,transmitters,avg_error_m,count_within_1m\n");
    for r in &out.records {
        let _ = writeln!(s, "{},{},{},{}", r.iteration, r.transmitter_count, fmt6(r.average_error), r.count_within_1m);
    }
    s
}

pub fn nodes_csv(out: &SimOutput) -> String {
    let mut s = String::from("id,role,true_x,true_y,est_x,est_y,error_m\n");
    for n in &out.nodes {
        let role = match n.role {
            Role::Anchor => "anchor",
            Role::Client => "client",
        };
        let _ = writeln!(
            s,
            "{},{role},{},{},{},{},{}",
            n.id,
            fmt6(n.truth.x),
            fmt6(n.truth.y),
            fmt6(n.estimate.x),
            fmt6(n.estimate.y),
            fmt6(n.error)
        );
    }
    s
}

pub fn simulate(config: &Path, out_dir: Option<PathBuf>, seed: Option<u64>) -> CmdResult {
    let scenario = ScenarioFile::load(config).map_err(Failure::Config)?;
    let dir = output_dir(out_dir, &scenario)?;
    let reps = scenario.repetitions;
    let base = seed.unwrap_or(scenario.sim.run_seed);
    let configs: Vec<SimConfig> = (0..reps as u64)
        .map(|k| {
            if seed.is_some() || reps > 1 {
                scenario.sim.clone().with_seed(base + k)
            } else {
                scenario.sim.clone()
            }
        })
        .collect();
    let outputs = configs
        .par_iter()
        .map(run_simulation)
        .collect::<Result<Vec<_>, _>>()
        .map_err(from_core)?;

    ensure_dir(&dir).map_err(runtime)?;
    for (k, (cfg, out)) in configs.iter().zip(&outputs).enumerate() {
        let target = if reps == 1 { dir.clone() } else { dir.join(format!("rep-{k:03}")) };
        ensure_dir(&target).map_err(runtime)?;
        write_atomic(&target.join("iterations.csv"), &iterations_csv(out)).map_err(runtime)?;
        write_atomic(&target.join("nodes.csv"), &nodes_csv(out)).map_err(runtime)?;
        println!(
            "seed {}: final average error {} m, {} clients within 1 m, {} symbol intervals",
            cfg.run_seed,
            fmt6(out.final_average_error()),
            out.records.last().map_or(0, |r| r.count_within_1m),
            out.symbols_elapsed
        );
    }
    Ok(())
}

pub fn sweep_snr(config: &Path, out_dir: Option<PathBuf>, snr: &str, seeds: u64, seed: Option<u64>) -> CmdResult {
    let scenario = ScenarioFile::load(config).map_err(Failure::Config)?;
    let spec = SweepSpec::parse(snr).map_err(Failure::Config)?;
    if seeds == 0 {
        return Err(Failure::Config(anyhow!("--seeds must be at least 1")));
    }
    let dir = output_dir(out_dir, &scenario)?;
    let base = seed.unwrap_or(scenario.sim.run_seed);
    let points: Vec<(f64, u64)> = spec
        .values()
        .into_iter()
        .flat_map(|snr| (0..seeds).map(move |k| (snr, base + k)))
        .collect();
    let errors = points
        .par_iter()
        .map(|&(snr_db, s)| {
            let cfg = SimConfig { snr_db, ..scenario.sim.clone() }.with_seed(s);
            run_simulation(&cfg).map(|o| o.final_average_error())
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(from_core)?;

    let mut csv = String::from("snr_db,seed,final_avg_error_m\n");
    for ((snr_db, s), err) in points.iter().zip(&errors) {
        let _ = writeln!(csv, "{},{s},{}", fmt6(*snr_db), fmt6(*err));
    }
    ensure_dir(&dir).map_err(runtime)?;
    write_atomic(&dir.join("sweep.csv"), &csv).map_err(runtime)?;
    for snr_db in spec.values() {
        let vals: Vec<f64> = points.iter().zip(&errors).filter(|((x, _), _)| *x == snr_db).map(|(_, e)| *e).collect();
        println!("{} dB: mean final error {} m", fmt6(snr_db), fmt6(vals.iter().sum::<f64>() / vals.len() as f64));
    }
    Ok(())
}

pub struct StatsArgs {
    pub lambda: f64,
    pub theta: f64,
    pub alpha: f64,
    pub duty_cycle: f64,
    pub snr_db: f64,
    pub samples: usize,
    pub seed: u64,
}

pub const DEGREE_TOLERANCE: f64 = 0.03;
pub const INTERFERENCE_TOLERANCE: f64 = 0.05;
pub const KS_TOLERANCE: f64 = 0.01;

fn relative(empirical: f64, exact: f64) -> f64 {
    if exact == 0.0 {
        empirical.abs()
    } else {
        (empirical - exact).abs() / exact.abs()
    }
}

pub fn validate_stats(a: &StatsArgs) -> CmdResult {
    if !(a.lambda >= 0.0 && a.theta > 0.0 && a.duty_cycle > 0.0 && a.duty_cycle < 1.0) || a.samples == 0 {
        return Err(Failure::Config(anyhow!("need lambda >= 0, theta > 0, 0 < duty-cycle < 1, samples > 0")));
    }
    let snr = 10f64.powf(a.snr_db / 10.0);
    let interference = netmodel::interference_variance(a.lambda, a.duty_cycle, snr, a.theta, a.alpha).map_err(from_core)? - 1.0;
    let degree = netmodel::mean_neighbor_count(a.lambda, a.theta, a.alpha);

    let radius = montecarlo::boundary_free_radius(a.theta, a.alpha);
    let sample = montecarlo::sample_degree(a.lambda, a.theta, a.alpha, radius, a.samples, a.seed);
    let mc_interference = montecarlo::sample_interference(
        a.lambda,
        a.duty_cycle,
        snr,
        a.theta,
        a.alpha,
        radius,
        50.0 * radius,
        a.samples,
        (a.samples / 1000).max(8),
        a.seed,
    );
    let ks = montecarlo::ks_distance(&sample.amplitudes, |u| netmodel::neighbor_amplitude_cdf(u, a.theta, a.alpha));

    let checks = [
        ("mean neighbor count", degree, sample.mean_degree, relative(sample.mean_degree, degree), DEGREE_TOLERANCE),
        ("non-neighbor interference power", interference, mc_interference, relative(mc_interference, interference), INTERFERENCE_TOLERANCE),
    ];
    let mut failed = Vec::new();
    for (name, exact, mc, rel, tol) in checks {
        let ok = rel <= tol;
        println!(
            "{name}: closed form {}, monte carlo {}, relative error {} (tolerance {}) {}",
            fmt6(exact),
            fmt6(mc),
            fmt6(rel),
            fmt6(tol),
            if ok { "ok" } else { "FAIL" }
        );
        if !ok {
            failed.push(name);
        }
    }
    let ks_ok = ks < KS_TOLERANCE;
    println!(
        "neighbor amplitude distribution: KS distance {} over {} samples (tolerance {}) {}",
        fmt6(ks),
        sample.amplitudes.len(),
        fmt6(KS_TOLERANCE),
        if ks_ok { "ok" } else { "FAIL" }
    );
    if !ks_ok {
        failed.push("neighbor amplitude distribution");
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Tolerance(format!("outside tolerance: {}", failed.join(", "))))
    }
}

pub struct BenchArgs {
    pub bench: BenchConfig,
    pub decoder: DecoderConfig,
    pub trials: usize,
    pub seed: u64,
    pub oracle: bool,
    pub out_dir: Option<PathBuf>,
}

pub fn bench_csv(seeds: &[u64], results: &[TrialResult]) -> String {
    let mut s = String::from("trial,seed,support_errors,amplitude_rmse,oracle_agrees\n");
    for (k, (seed, r)) in seeds.iter().zip(results).enumerate() {
        let oracle = r.oracle_agrees.map_or(String::new(), |b| u8::from(b).to_string());
        let _ = writeln!(s, "{k},{seed},{},{},{oracle}", r.support_errors, fmt6(r.amplitude_rmse));
    }
    s
}

pub fn decode_bench(a: &BenchArgs) -> CmdResult {
    let b = &a.bench;
    if b.users == 0 || b.bits == 0 || b.bits > 16 || b.frame_length == 0 || !(b.duty_cycle > 0.0 && b.duty_cycle < 1.0) {
        return Err(Failure::Config(anyhow!("need users >= 1, 1 <= bits <= 16, frame-length >= 1, 0 < duty-cycle < 1")));
    }
    if a.decoder.iterations == 0 {
        return Err(Failure::Config(anyhow!("--bp-iterations must be at least 1")));
    }
    let seeds: Vec<u64> = (0..a.trials as u64).map(|k| rodd::rng::key(&[a.seed, k])).collect();
    let results = seeds
        .par_iter()
        .map(|&s| run_trial(b, &a.decoder, s, a.oracle))
        .collect::<Result<Vec<_>, _>>()
        .map_err(from_core)?;

    if let Some(dir) = &a.out_dir {
        ensure_dir(dir).map_err(runtime)?;
        write_atomic(&dir.join("bench.csv"), &bench_csv(&seeds, &results)).map_err(runtime)?;
    }
    let n = results.len().max(1) as f64;
    let errors: usize = results.iter().map(|r| r.support_errors).sum();
    println!(
        "{} trials: block error rate {}, trials with any error {}, mean relative amplitude rmse {}",
        results.len(),
        fmt6(errors as f64 / (n * b.users as f64)),
        results.iter().filter(|r| r.support_errors > 0).count(),
        fmt6(results.iter().map(|r| r.amplitude_rmse).sum::<f64>() / n)
    );
    if a.oracle {
        let agree = results.iter().filter(|r| r.oracle_agrees == Some(true)).count();
        println!("agreement with exhaustive search: {} of {}", agree, results.len());
    }
    Ok(())
}
