//! Coordinate quantization and per-node on-off codebooks.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;

use crate::{rng, Error, Point, Result};

const CODEBOOK_TAG: u64 = 0xc0de_b00c;

/// A node's table of `2^l` ternary codewords, `M_s` symbols each.
///
/// Entries are i.i.d.: 0 with probability `1 − q`, ±1 with `q/2` each. The
/// table is a pure function of `(owner_nia, l, M_s, q, salt)`, so a receiver
/// can regenerate any neighbor's book from its address alone.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    owner_nia: u32,
    bits: u32,
    frame_length: usize,
    duty_cycle: f64,
    salt: u64,
    words: Vec<i8>,
}

impl Codebook {
    pub fn generate(owner_nia: u32, bits: u32, frame_length: usize, duty_cycle: f64, salt: u64) -> Result<Self> {
        check_params(bits, frame_length, duty_cycle)?;
        let mut rng = rng::stream(&[CODEBOOK_TAG, salt, owner_nia as u64]);
        let half = duty_cycle / 2.0;
        let words = (0..(1usize << bits) * frame_length)
            .map(|_| {
                let u: f64 = rng.gen();
                if u < half {
                    -1
                } else if u < duty_cycle {
                    1
                } else {
                    0
                }
            })
            .collect();
        Ok(Codebook { owner_nia, bits, frame_length, duty_cycle, salt, words })
    }

    pub fn owner_nia(&self) -> u32 {
        self.owner_nia
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn size(&self) -> usize {
        1 << self.bits
    }

    pub fn frame_length(&self) -> usize {
        self.frame_length
    }

    pub fn duty_cycle(&self) -> f64 {
        self.duty_cycle
    }

    pub fn salt(&self) -> u64 {
        self.salt
    }

    /// Codeword `S(ω)`.
    pub fn word(&self, message: usize) -> &[i8] {
        &self.words[message * self.frame_length..(message + 1) * self.frame_length]
    }

    pub fn entries(&self) -> &[i8] {
        &self.words
    }

    /// Text dump: one header line, then one row per codeword with symbols
    /// written as `-`, `0`, `+`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.words.len() + self.size() + 96);
        let _ = writeln!(
            out,
            "codebook nia={} bits={} frame_length={} duty_cycle={} salt={}",
            self.owner_nia, self.bits, self.frame_length, self.duty_cycle, self.salt
        );
        for j in 0..self.size() {
            out.extend(self.word(j).iter().map(|&s| match s {
                -1 => '-',
                0 => '0',
                _ => '+',
            }));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Fixture { line: 1, msg: "empty input".into() })?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("codebook") {
            return Err(Error::Fixture { line: 1, msg: "expected 'codebook' header".into() });
        }
        let mut get = |name: &str| -> Result<String> {
            let f = fields.next().ok_or(Error::Fixture { line: 1, msg: format!("missing {name}") })?;
            f.strip_prefix(name)
                .and_then(|v| v.strip_prefix('='))
                .map(str::to_owned)
                .ok_or(Error::Fixture { line: 1, msg: format!("expected {name}=...") })
        };
        let bad = |msg: &str| Error::Fixture { line: 1, msg: msg.to_owned() };
        let owner_nia = get("nia")?.parse().map_err(|_| bad("nia"))?;
        let bits = get("bits")?.parse().map_err(|_| bad("bits"))?;
        let frame_length = get("frame_length")?.parse().map_err(|_| bad("frame_length"))?;
        let duty_cycle = get("duty_cycle")?.parse().map_err(|_| bad("duty_cycle"))?;
        let salt = get("salt")?.parse().map_err(|_| bad("salt"))?;
        check_params(bits, frame_length, duty_cycle)?;
        let mut words = Vec::with_capacity((1usize << bits) * frame_length);
        let mut rows = 0;
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            if line.len() != frame_length {
                return Err(Error::Fixture { line: idx + 1, msg: format!("row has {} symbols", line.len()) });
            }
            for c in line.chars() {
                words.push(match c {
                    '-' => -1,
                    '0' => 0,
                    '+' => 1,
                    other => {
                        return Err(Error::Fixture { line: idx + 1, msg: format!("bad symbol {other:?}") })
                    }
                });
            }
            rows += 1;
        }
        if rows != 1usize << bits {
            return Err(Error::Fixture { line: rows + 1, msg: format!("expected {} rows, got {rows}", 1usize << bits) });
        }
        Ok(Codebook { owner_nia, bits, frame_length, duty_cycle, salt, words })
    }
}

fn check_params(bits: u32, frame_length: usize, duty_cycle: f64) -> Result<()> {
    if !(1..=20).contains(&bits) {
        return Err(Error::Config(format!("bits per coordinate must be in 1..=20, got {bits}")));
    }
    if frame_length == 0 {
        return Err(Error::Config("frame length must be at least one symbol".into()));
    }
    if !(duty_cycle > 0.0 && duty_cycle < 1.0) {
        return Err(Error::Config(format!("duty cycle must lie in (0, 1), got {duty_cycle}")));
    }
    Ok(())
}

/// Quantization step `Δ = 2^(−l) A`.
pub fn step(area_side: f64, bits: u32) -> f64 {
    area_side / (1u64 << bits) as f64
}

/// Cell index of coordinate `x`, clamped to `[0, 2^l)`.
pub fn quantize(x: f64, area_side: f64, bits: u32) -> u32 {
    let top = ((1u64 << bits) - 1) as f64;
    let cell = (x / step(area_side, bits)).floor();
    // NaN falls through both comparisons to the lowest cell.
    if cell >= top {
        top as u32
    } else if cell > 0.0 {
        cell as u32
    } else {
        0
    }
}

/// Midpoint of cell `index`.
pub fn dequantize(index: u32, area_side: f64, bits: u32) -> f64 {
    (index as f64 + 0.5) * step(area_side, bits)
}

/// Both coordinates of a location, quantized.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantizedLocation {
    pub omega: u32,
    pub nu: u32,
    pub step: f64,
}

impl QuantizedLocation {
    pub fn from_point(p: Point, area_side: f64, bits: u32) -> Self {
        QuantizedLocation {
            omega: quantize(p.x, area_side, bits),
            nu: quantize(p.y, area_side, bits),
            step: step(area_side, bits),
        }
    }

    pub fn to_point(self) -> Point {
        Point::new((self.omega as f64 + 0.5) * self.step, (self.nu as f64 + 0.5) * self.step)
    }
}

/// The block-sparse vector `X`: `K` blocks of `2^l` entries, block `i`
/// holding neighbor `i`'s link amplitude at the offset of the message it sent.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    bits: u32,
    entries: Vec<Complex64>,
}

impl SparseVector {
    pub fn block_size(&self) -> usize {
        1 << self.bits
    }

    pub fn blocks(&self) -> usize {
        self.entries.len() / self.block_size()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn block(&self, i: usize) -> &[Complex64] {
        let b = self.block_size();
        &self.entries[i * b..(i + 1) * b]
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|v| **v != Complex64::new(0.0, 0.0)).count()
    }

    /// Offset of the largest-magnitude entry in every block (lowest offset on
    /// ties).
    pub fn block_argmax(&self) -> Vec<usize> {
        (0..self.blocks())
            .map(|i| {
                self.block(i)
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |(bi, bv), (j, v)| if v.norm() > bv { (j, v.norm()) } else { (bi, bv) })
                    .0
            })
            .collect()
    }
}

/// Builds `X` from per-neighbor messages; `None` marks a silent neighbor,
/// whose block stays all-zero.
pub fn build_sparse_vector(bits: u32, messages: &[Option<usize>], amplitudes: &[Complex64]) -> Result<SparseVector> {
    if messages.len() != amplitudes.len() {
        return Err(Error::Config("one amplitude per message is required".into()));
    }
    let block = 1usize << bits;
    let mut entries = vec![Complex64::new(0.0, 0.0); block * messages.len()];
    for (i, (msg, amp)) in messages.iter().zip(amplitudes).enumerate() {
        if let Some(m) = *msg {
            if m >= block {
                return Err(Error::MessageOutOfRange { index: m, bits });
            }
            entries[i * block + m] = *amp;
        }
    }
    Ok(SparseVector { bits, entries })
}
