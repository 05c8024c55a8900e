//! Per-frame observation synthesis.
//!
//! A receiver hears the channel only in slots where its own codeword is zero
//! (all slots when it stays silent). In those rows the received samples are
//!
//! ```text
//! y = (1/σ) [ Σ_{i ∈ N(r), transmitting} √γ U_ri S_i(ω_i) + noise ]
//!   = √γ_s S_norm X + W,        S_norm = S / √(M_s (1−q) q)
//! ```
//!
//! with `W` unit-variance complex Gaussian. The stored signature matrix keeps
//! the raw ternary entries; `γ_s` and [`Observation::column_scale`] carry the
//! normalization.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::codec::Codebook;
use crate::netmodel::{self, channel_coefficient, Network};
use crate::{rng, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Complex Gaussian with the closed-form noise-plus-interference variance.
    #[default]
    Analytic,
    /// Unit thermal noise plus the actual transmissions of non-neighbors.
    Empirical,
    /// No noise at all; the scaling still uses the analytic `σ²`.
    Noiseless,
}

/// Link-level constants shared by every receiver in a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    /// Nominal SNR `γ`, linear.
    pub snr: f64,
    pub bits: u32,
    pub frame_length: usize,
    pub duty_cycle: f64,
    /// Noise-plus-interference power `σ²`.
    pub sigma2: f64,
}

impl ChannelParams {
    /// Parameters with `σ²` taken from the closed form for the network's
    /// intensity, threshold and path loss.
    pub fn for_network(net: &Network, snr: f64, bits: u32, frame_length: usize, duty_cycle: f64) -> Result<Self> {
        let sigma2 = netmodel::interference_variance(
            net.intensity(),
            duty_cycle,
            snr,
            net.neighbor_threshold(),
            net.path_loss_exponent(),
        )?;
        Ok(ChannelParams { snr, bits, frame_length, duty_cycle, sigma2 })
    }

    pub fn gamma_s(&self) -> f64 {
        effective_snr(self.snr, self.frame_length, self.duty_cycle, self.sigma2)
    }
}

/// `γ_s = γ M_s (1−q) q / σ²`.
pub fn effective_snr(snr: f64, frame_length: usize, duty_cycle: f64, sigma2: f64) -> f64 {
    snr * frame_length as f64 * (1.0 - duty_cycle) * duty_cycle / sigma2
}

/// What one receiver sees during one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub receiver: u32,
    pub bits: u32,
    pub frame_length: usize,
    pub duty_cycle: f64,
    pub gamma_s: f64,
    /// Slot indices the receiver listened in.
    pub visible_rows: Vec<usize>,
    /// Neighbor id owning each block of `2^l` columns.
    pub block_map: Vec<u32>,
    /// Raw ternary signature matrix, `M × N`, row-major.
    pub signature: Vec<i8>,
    pub received: Vec<Complex64>,
}

impl Observation {
    pub fn rows(&self) -> usize {
        self.visible_rows.len()
    }

    pub fn block_size(&self) -> usize {
        1 << self.bits
    }

    pub fn cols(&self) -> usize {
        self.block_map.len() * self.block_size()
    }

    pub fn blocks(&self) -> usize {
        self.block_map.len()
    }

    /// True when the receiver has no neighbors or heard no slots.
    pub fn is_empty(&self) -> bool {
        self.block_map.is_empty() || self.visible_rows.is_empty()
    }

    pub fn row(&self, mu: usize) -> &[i8] {
        let n = self.cols();
        &self.signature[mu * n..(mu + 1) * n]
    }

    pub fn entry(&self, mu: usize, k: usize) -> i8 {
        self.signature[mu * self.cols() + k]
    }

    /// `1 / √(M_s (1−q) q)`, mapping raw entries to the unit-expected-energy
    /// columns of the decoder's model.
    pub fn column_scale(&self) -> f64 {
        1.0 / (self.frame_length as f64 * (1.0 - self.duty_cycle) * self.duty_cycle).sqrt()
    }

    /// Text fixture: header fields, one `row` line per visible slot with the
    /// ternary entries as `-0+`, one `y` line per received sample.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "observation");
        let _ = writeln!(out, "receiver {}", self.receiver);
        let _ = writeln!(out, "bits {}", self.bits);
        let _ = writeln!(out, "frame_length {}", self.frame_length);
        let _ = writeln!(out, "duty_cycle {:?}", self.duty_cycle);
        let _ = writeln!(out, "gamma_s {:?}", self.gamma_s);
        let _ = writeln!(out, "blocks{}", join_prefixed(&self.block_map));
        let _ = writeln!(out, "visible{}", join_prefixed(&self.visible_rows));
        for mu in 0..self.rows() {
            out.push_str("row ");
            out.extend(self.row(mu).iter().map(|&s| match s {
                -1 => '-',
                0 => '0',
                _ => '+',
            }));
            out.push('\n');
        }
        for y in &self.received {
            let _ = writeln!(out, "y {:?} {:?}", y.re, y.im);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let err = |line: usize, msg: &str| Error::Fixture { line: line + 1, msg: msg.to_owned() };
        let mut next = |key: &str| -> Result<(usize, Vec<String>)> {
            let (idx, line) = lines.next().ok_or(err(usize::MAX - 1, "unexpected end of fixture"))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(key) {
                return Err(err(idx, &format!("expected '{key}'")));
            }
            Ok((idx, parts.map(str::to_owned).collect()))
        };
        fn one<T: std::str::FromStr>(idx: usize, v: &[String]) -> Result<T> {
            v.first()
                .and_then(|s| s.parse().ok())
                .ok_or(Error::Fixture { line: idx + 1, msg: "bad value".into() })
        }
        fn many<T: std::str::FromStr>(idx: usize, v: &[String]) -> Result<Vec<T>> {
            v.iter()
                .map(|s| s.parse().map_err(|_| Error::Fixture { line: idx + 1, msg: format!("bad value {s:?}") }))
                .collect()
        }
        next("observation")?;
        let (i, v) = next("receiver")?;
        let receiver = one(i, &v)?;
        let (i, v) = next("bits")?;
        let bits: u32 = one(i, &v)?;
        let (i, v) = next("frame_length")?;
        let frame_length = one(i, &v)?;
        let (i, v) = next("duty_cycle")?;
        let duty_cycle = one(i, &v)?;
        let (i, v) = next("gamma_s")?;
        let gamma_s = one(i, &v)?;
        let (i, v) = next("blocks")?;
        let block_map: Vec<u32> = many(i, &v)?;
        let (i, v) = next("visible")?;
        let visible_rows: Vec<usize> = many(i, &v)?;
        if bits == 0 || bits > 20 {
            return Err(err(0, "bits out of range"));
        }
        let n = block_map.len() << bits;
        let mut signature = Vec::with_capacity(visible_rows.len() * n);
        for _ in 0..visible_rows.len() {
            let (i, v) = next("row")?;
            let row = v.first().map(String::as_str).unwrap_or("");
            if row.len() != n {
                return Err(err(i, &format!("row has {} entries, expected {n}", row.len())));
            }
            for c in row.chars() {
                signature.push(match c {
                    '-' => -1,
                    '0' => 0,
                    '+' => 1,
                    _ => return Err(err(i, "bad symbol")),
                });
            }
        }
        let mut received = Vec::with_capacity(visible_rows.len());
        for _ in 0..visible_rows.len() {
            let (i, v) = next("y")?;
            let parts: Vec<f64> = many(i, &v)?;
            if parts.len() != 2 {
                return Err(err(i, "expected re and im"));
            }
            received.push(Complex64::new(parts[0], parts[1]));
        }
        Ok(Observation {
            receiver,
            bits,
            frame_length,
            duty_cycle,
            gamma_s,
            visible_rows,
            block_map,
            signature,
            received,
        })
    }
}

fn join_prefixed<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().fold(String::new(), |mut s, x| {
        let _ = write!(s, " {x}");
        s
    })
}

/// Synthesizes the frame observed by `receiver`.
///
/// `transmissions[id]` is the message node `id` sends this frame, or `None`
/// if it stays silent. `codebooks[id]` must be node `id`'s book.
pub fn observe(
    network: &Network,
    codebooks: &[Codebook],
    receiver: u32,
    transmissions: &[Option<u32>],
    mode: NoiseMode,
    params: &ChannelParams,
    noise_seed: u64,
) -> Result<Observation> {
    network.node(receiver)?;
    if transmissions.len() != network.len() || codebooks.len() != network.len() {
        return Err(Error::Config("one transmission slot and codebook per node is required".into()));
    }
    let ms = params.frame_length;
    let block = 1usize << params.bits;
    for (id, msg) in transmissions.iter().enumerate() {
        if let Some(m) = *msg {
            if m as usize >= block {
                return Err(Error::MessageOutOfRange { index: m as usize, bits: params.bits });
            }
            if codebooks[id].frame_length() != ms || codebooks[id].bits() != params.bits {
                return Err(Error::Config(format!("codebook of node {id} does not match the frame format")));
            }
        }
    }

    let visible_rows: Vec<usize> = match transmissions[receiver as usize] {
        Some(own) => {
            let word = codebooks[receiver as usize].word(own as usize);
            (0..ms).filter(|&m| word[m] == 0).collect()
        }
        None => (0..ms).collect(),
    };
    let m_rows = visible_rows.len();
    let neighbors = network.neighbors(receiver);
    let n_cols = neighbors.len() * block;

    let mut signature = vec![0i8; m_rows * n_cols];
    for (b, &nb) in neighbors.iter().enumerate() {
        let book = &codebooks[nb as usize];
        for j in 0..block {
            let word = book.word(j);
            let col = b * block + j;
            for (mu, &slot) in visible_rows.iter().enumerate() {
                signature[mu * n_cols + col] = word[slot];
            }
        }
    }

    let sqrt_snr = params.snr.sqrt();
    let mut acc = vec![Complex64::new(0.0, 0.0); m_rows];
    let add_link = |acc: &mut [Complex64], from: u32| -> Result<()> {
        if let Some(msg) = transmissions[from as usize] {
            let gain = channel_coefficient(network, receiver, from)? * sqrt_snr;
            let word = codebooks[from as usize].word(msg as usize);
            for (a, &slot) in acc.iter_mut().zip(&visible_rows) {
                match word[slot] {
                    1 => *a += gain,
                    -1 => *a -= gain,
                    _ => {}
                }
            }
        }
        Ok(())
    };
    for &nb in neighbors {
        add_link(&mut acc, nb)?;
    }

    let mut noise_rng = rng::stream(&[noise_seed, receiver as u64]);
    let mut gaussian = |var: f64| -> Complex64 {
        let s = (var / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(&mut noise_rng);
        let im: f64 = StandardNormal.sample(&mut noise_rng);
        Complex64::new(re * s, im * s)
    };
    match mode {
        NoiseMode::Analytic => acc.iter_mut().for_each(|a| *a += gaussian(params.sigma2)),
        NoiseMode::Empirical => {
            acc.iter_mut().for_each(|a| *a += gaussian(1.0));
            for other in 0..network.len() as u32 {
                if other != receiver && neighbors.binary_search(&other).is_err() {
                    add_link(&mut acc, other)?;
                }
            }
        }
        NoiseMode::Noiseless => {}
    }

    let inv_sigma = 1.0 / params.sigma2.sqrt();
    let received = acc.into_iter().map(|a| a * inv_sigma).collect();
    Ok(Observation {
        receiver,
        bits: params.bits,
        frame_length: ms,
        duty_cycle: params.duty_cycle,
        gamma_s: params.gamma_s(),
        visible_rows,
        block_map: neighbors.to_vec(),
        signature,
        received,
    })
}

/// Mean per-slot power that transmitting non-neighbors deliver to `receiver`
/// when each transmits a random codeword: `Σ_j γ q |U_rj|²`.
pub fn expected_non_neighbor_power(network: &Network, receiver: u32, snr: f64, duty_cycle: f64) -> Result<f64> {
    let nbrs = network.neighbors(receiver);
    let mut total = 0.0;
    for other in 0..network.len() as u32 {
        if other != receiver && nbrs.binary_search(&other).is_err() {
            total += snr * duty_cycle * channel_coefficient(network, receiver, other)?.norm_sqr();
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn effective_snr_values() {
        assert_abs_diff_eq!(effective_snr(1000.0, 600, 0.5, 12.343), 150_000.0 / 12.343, epsilon = 1e-9);
        assert_abs_diff_eq!(effective_snr(1000.0, 600, 0.5, 12.343), 12152.64, epsilon = 0.1);
        let sigma2 = 1000.0 * 600.0 * 0.25;
        assert_abs_diff_eq!(effective_snr(1000.0, 600, 0.5, sigma2), 1.0, epsilon = 1e-12);
        assert!(effective_snr(1000.0, 600, 1e-9, 1.0) < 1e-3);
        assert!(effective_snr(1000.0, 600, 1.0 - 1e-9, 1.0) < 1e-3);
    }
}
