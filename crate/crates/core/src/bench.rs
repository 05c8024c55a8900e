//! Synthetic single-receiver decoding trials.
//!
//! A receiver sits at the center of an otherwise empty area with `users`
//! neighbors scattered inside its neighborhood. Every neighbor transmits a
//! uniformly random message; there is no interference, so `σ² = 1` and the
//! effective SNR is `γ M_s (1−q) q`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{observe, ChannelParams, NoiseMode, Observation};
use crate::codec::Codebook;
use crate::decoder::{decode, oracle_decode, DecodeOutput, DecoderConfig};
use crate::netmodel::{channel_coefficient, Fading, Network, Node, Role};
use crate::{rng, Error, Point, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub users: usize,
    pub bits: u32,
    pub frame_length: usize,
    pub duty_cycle: f64,
    pub snr_db: f64,
    pub noise_mode: NoiseMode,
    pub path_loss_exponent: f64,
    pub neighbor_threshold: f64,
}

impl BenchConfig {
    /// `K = 11`, `l = 8`, `M_s = 600`, `q = 0.5`, 30 dB.
    pub fn paper_scale() -> Self {
        BenchConfig {
            users: 11,
            bits: 8,
            frame_length: 600,
            duty_cycle: 0.5,
            snr_db: 30.0,
            noise_mode: NoiseMode::Analytic,
            path_loss_exponent: 3.0,
            neighbor_threshold: 1e-3,
        }
    }

    pub fn small(users: usize, bits: u32) -> Self {
        BenchConfig { users, bits, frame_length: 32, ..BenchConfig::paper_scale() }
    }
}

/// One generated instance with its ground truth.
#[derive(Clone, Debug)]
pub struct Instance {
    pub observation: Observation,
    pub messages: Vec<usize>,
    pub amplitudes: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialResult {
    pub support_errors: usize,
    /// RMS of `|â − U|` over blocks, relative to the RMS of `|U|`.
    pub amplitude_rmse: f64,
    pub oracle_agrees: Option<bool>,
}

pub fn generate_instance(cfg: &BenchConfig, seed: u64) -> Result<Instance> {
    if cfg.users == 0 {
        return Err(Error::Config("at least one user is required".into()));
    }
    let mut rng = rng::stream(&[seed, 0xbe7c]);
    let center = Point::new(50.0, 50.0);
    let reach = cfg.neighbor_threshold.powf(-1.0 / cfg.path_loss_exponent);
    let fading_seed: u64 = rng.gen();
    let fading = Fading::Keyed { seed: fading_seed };

    let mut nodes = vec![Node { id: 0, position: center, role: Role::Client }];
    while nodes.len() <= cfg.users {
        let id = nodes.len() as u32;
        let r = reach * rng.gen::<f64>().sqrt();
        let phi = std::f64::consts::TAU * rng.gen::<f64>();
        let p = center + Point::new(r * phi.cos(), r * phi.sin());
        let gain = fading.coefficient(0, id).norm_sqr() * p.dist2(center).powf(-cfg.path_loss_exponent / 2.0);
        if r > 0.05 && gain >= cfg.neighbor_threshold {
            nodes.push(Node { id, position: p, role: Role::Client });
        }
    }
    let net = Network::from_parts(100.0, cfg.path_loss_exponent, cfg.neighbor_threshold, nodes, fading)?;
    if net.neighbors(0).len() != cfg.users {
        return Err(Error::Config("generated users are not all mutual neighbors".into()));
    }

    let codebooks = (0..=cfg.users as u32)
        .map(|id| Codebook::generate(id, cfg.bits, cfg.frame_length, cfg.duty_cycle, seed))
        .collect::<Result<Vec<_>>>()?;
    let block = 1usize << cfg.bits;
    let messages: Vec<usize> = (0..cfg.users).map(|_| rng.gen_range(0..block)).collect();
    let mut tx = vec![None];
    tx.extend(messages.iter().map(|&m| Some(m as u32)));
    let params = ChannelParams {
        snr: 10f64.powf(cfg.snr_db / 10.0),
        bits: cfg.bits,
        frame_length: cfg.frame_length,
        duty_cycle: cfg.duty_cycle,
        sigma2: 1.0,
    };
    let observation = observe(&net, &codebooks, 0, &tx, cfg.noise_mode, &params, rng.gen())?;
    let amplitudes = net
        .neighbors(0)
        .iter()
        .map(|&j| channel_coefficient(&net, 0, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(Instance { observation, messages, amplitudes })
}

pub fn score_trial(instance: &Instance, output: &DecodeOutput) -> TrialResult {
    let support_errors = output
        .blocks
        .iter()
        .zip(&instance.messages)
        .filter(|(b, &m)| b.message_index != m)
        .count();
    let (num, den) = output
        .blocks
        .iter()
        .zip(&instance.amplitudes)
        .fold((0.0, 0.0), |(n, d), (b, u)| (n + (b.refined_amplitude - u).norm_sqr(), d + u.norm_sqr()));
    TrialResult { support_errors, amplitude_rmse: (num / den.max(f64::MIN_POSITIVE)).sqrt(), oracle_agrees: None }
}

/// Generates, decodes and scores one trial; optionally cross-checks the
/// support against exhaustive search.
pub fn run_trial(cfg: &BenchConfig, decoder: &DecoderConfig, seed: u64, with_oracle: bool) -> Result<TrialResult> {
    let instance = generate_instance(cfg, seed)?;
    let output = decode(&instance.observation, decoder)?;
    let mut result = score_trial(&instance, &output);
    if with_oracle {
        let ml = oracle_decode(&instance.observation)?;
        result.oracle_agrees = Some(output.blocks.iter().zip(&ml.messages).all(|(b, &m)| b.message_index == m));
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_reproducible() {
        let cfg = BenchConfig::small(3, 3);
        let a = generate_instance(&cfg, 9).unwrap();
        let b = generate_instance(&cfg, 9).unwrap();
        assert_eq!(a.observation, b.observation);
        assert_eq!(a.messages, b.messages);
        assert_eq!(a.observation.blocks(), 3);
        assert!(a.amplitudes.iter().all(|u| u.norm_sqr() >= 1e-3));
    }

    #[test]
    fn single_user_noiseless_is_exact() {
        let cfg = BenchConfig { noise_mode: NoiseMode::Noiseless, ..BenchConfig::small(1, 3) };
        for seed in 0..20 {
            let r = run_trial(&cfg, &DecoderConfig::default(), seed, true).unwrap();
            assert_eq!(r.support_errors, 0, "seed {seed}");
            assert!(r.amplitude_rmse < 1e-9);
            assert_eq!(r.oracle_agrees, Some(true));
        }
    }
}
