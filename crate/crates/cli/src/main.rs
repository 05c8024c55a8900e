//! `rodd`: batch runs of the localization protocol.
//!
//! Exit status is 0 on success, 2 for configuration errors, 3 when
//! `validate-stats` finds a value outside tolerance and 1 for anything else.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "rodd", version, about = "Distributed ranging and localization simulator")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "RODD_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write iterations.csv and nodes.csv.
    Simulate {
        #[arg(long, env = "RODD_CONFIG")]
        config: PathBuf,
        /// Overrides the scenario's out_dir.
        #[arg(long, env = "RODD_OUT_DIR")]
        out_dir: Option<PathBuf>,
        /// Geometry and run seed; replaces both seeds in the scenario.
        #[arg(long, env = "RODD_SEED")]
        seed: Option<u64>,
    },
    /// Run a scenario across SNR values and seeds and write sweep.csv.
    SweepSnr {
        #[arg(long, env = "RODD_CONFIG")]
        config: PathBuf,
        #[arg(long, env = "RODD_OUT_DIR")]
        out_dir: Option<PathBuf>,
        /// START:STOP:STEP in dB.
        #[arg(long, env = "RODD_SNR_DB", allow_hyphen_values = true)]
        snr_db: String,
        #[arg(long, env = "RODD_SEEDS", default_value_t = 3)]
        seeds: u64,
        /// First seed; later seeds count up from it.
        #[arg(long, env = "RODD_SEED")]
        seed: Option<u64>,
    },
    /// Compare Monte Carlo network statistics with their closed forms.
    ValidateStats {
        #[arg(long, default_value_t = 0.04)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-3)]
        theta: f64,
        #[arg(long, default_value_t = 3.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        duty_cycle: f64,
        #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
        snr_db: f64,
        /// Independent fields drawn for the degree and interference estimates.
        #[arg(long, env = "RODD_TRIALS", default_value_t = 10_000)]
        samples: usize,
        #[arg(long, env = "RODD_SEED", default_value_t = 1)]
        seed: u64,
    },
    /// Decode synthetic single-receiver frames and write bench.csv.
    DecodeBench {
        #[arg(long, default_value_t = 11)]
        users: usize,
        #[arg(long, default_value_t = 8)]
        bits: u32,
        #[arg(long, default_value_t = 600)]
        frame_length: usize,
        #[arg(long, default_value_t = 0.5)]
        duty_cycle: f64,
        #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
        snr_db: f64,
        #[arg(long, value_enum, default_value_t = Noise::Analytic)]
        noise: Noise,
        #[arg(long, value_enum, default_value_t = Mode::GainCompensated)]
        decoder: Mode,
        #[arg(long, default_value_t = 10)]
        bp_iterations: usize,
        #[arg(long, env = "RODD_TRIALS", default_value_t = 100)]
        trials: usize,
        #[arg(long, env = "RODD_SEED", default_value_t = 1)]
        seed: u64,
        /// Also run exhaustive search on each trial (small instances only).
        #[arg(long)]
        oracle: bool,
        #[arg(long, env = "RODD_OUT_DIR")]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Noise {
    Analytic,
    Empirical,
    Noiseless,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Literal,
    GainCompensated,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Simulate { config, out_dir, seed } => commands::simulate(&config, out_dir, seed),
        Command::SweepSnr { config, out_dir, snr_db, seeds, seed } => {
            commands::sweep_snr(&config, out_dir, &snr_db, seeds, seed)
        }
        Command::ValidateStats { lambda, theta, alpha, duty_cycle, snr_db, samples, seed } => {
            commands::validate_stats(&commands::StatsArgs { lambda, theta, alpha, duty_cycle, snr_db, samples, seed })
        }
        Command::DecodeBench {
            users,
            bits,
            frame_length,
            duty_cycle,
            snr_db,
            noise,
            decoder,
            bp_iterations,
            trials,
            seed,
            oracle,
            out_dir,
        } => commands::decode_bench(&commands::BenchArgs {
            bench: rodd::bench::BenchConfig {
                users,
                bits,
                frame_length,
                duty_cycle,
                snr_db,
                noise_mode: match noise {
                    Noise::Analytic => rodd::channel::NoiseMode::Analytic,
                    Noise::Empirical => rodd::channel::NoiseMode::Empirical,
                    Noise::Noiseless => rodd::channel::NoiseMode::Noiseless,
                },
                ..rodd::bench::BenchConfig::paper_scale()
            },
            decoder: rodd::decoder::DecoderConfig {
                mode: match decoder {
                    Mode::Literal => rodd::decoder::DecoderMode::Literal,
                    Mode::GainCompensated => rodd::decoder::DecoderMode::GainCompensated,
                },
                iterations: bp_iterations,
                ..Default::default()
            },
            trials,
            seed,
            oracle,
            out_dir,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
