//! Monte Carlo samplers for the typical-node statistics.
//!
//! These draw a Poisson field around a receiver at the origin, independently
//! of the closed forms in the parent module, and are what the statistical
//! validators compare against.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::rng;

/// Radius beyond which the neighbor-count integral is negligible:
/// `10 θ^(−1/α)` (100 m at θ = 1e-3, α = 3).
pub fn boundary_free_radius(threshold: f64, path_loss_exponent: f64) -> f64 {
    10.0 * threshold.powf(-1.0 / path_loss_exponent)
}

#[derive(Clone, Debug, Default)]
pub struct DegreeSample {
    pub samples: usize,
    pub mean_degree: f64,
    /// `|U|` of every neighbor seen, across all samples.
    pub amplitudes: Vec<f64>,
}

/// Counts the neighbors of a node at the origin over `samples` independent
/// Poisson fields of intensity `λ` on a disc of the given radius.
pub fn sample_degree(
    intensity: f64,
    threshold: f64,
    path_loss_exponent: f64,
    radius: f64,
    samples: usize,
    seed: u64,
) -> DegreeSample {
    let mean_points = intensity * std::f64::consts::PI * radius * radius;
    let per_sample: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(&[seed, 0xde9, k as u64]);
            let count = poisson_count(&mut rng, mean_points);
            let mut amps = Vec::new();
            for _ in 0..count {
                let r2 = radius * radius * rng.gen::<f64>();
                let power = -(1.0 - rng.gen::<f64>()).ln();
                let gain = power * r2.powf(-path_loss_exponent / 2.0);
                if gain >= threshold {
                    amps.push(gain.sqrt());
                }
            }
            amps
        })
        .collect();
    let total: usize = per_sample.iter().map(Vec::len).sum();
    DegreeSample {
        samples,
        mean_degree: if samples == 0 { 0.0 } else { total as f64 / samples as f64 },
        amplitudes: per_sample.into_iter().flatten().collect(),
    }
}

/// Mean per-slot power received from transmitting non-neighbors.
///
/// The field is split into a disc of `inner_radius`, where neighbors and
/// strong interferers live, and an annulus out to `outer_radius`, whose
/// contribution is nearly deterministic and so gets fewer samples. Each slot
/// a node transmits independently with probability `q`, so the transmitters
/// form a thinned field of intensity `λq`.
#[allow(clippy::too_many_arguments)]
pub fn sample_interference(
    intensity: f64,
    duty_cycle: f64,
    snr: f64,
    threshold: f64,
    path_loss_exponent: f64,
    inner_radius: f64,
    outer_radius: f64,
    inner_samples: usize,
    outer_samples: usize,
    seed: u64,
) -> f64 {
    let thinned = intensity * duty_cycle;
    let region = |r_lo: f64, r_hi: f64, n: usize, tag: u64| -> f64 {
        if n == 0 || r_hi <= r_lo {
            return 0.0;
        }
        let mean_points = thinned * std::f64::consts::PI * (r_hi * r_hi - r_lo * r_lo);
        let sums: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|k| {
                let mut rng = rng::stream(&[seed, tag, k as u64]);
                let count = poisson_count(&mut rng, mean_points);
                let mut acc = 0.0;
                for _ in 0..count {
                    let r2 = r_lo * r_lo + (r_hi * r_hi - r_lo * r_lo) * rng.gen::<f64>();
                    let power = -(1.0 - rng.gen::<f64>()).ln();
                    let gain = power * r2.powf(-path_loss_exponent / 2.0);
                    if gain < threshold {
                        acc += snr * gain;
                    }
                }
                acc
            })
            .collect();
        sums.iter().sum::<f64>() / n as f64
    };
    region(0.0, inner_radius, inner_samples, 0x1a) + region(inner_radius, outer_radius, outer_samples, 0x1b)
}

fn poisson_count<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Kolmogorov–Smirnov distance between an empirical sample and a continuous
/// distribution function.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}
