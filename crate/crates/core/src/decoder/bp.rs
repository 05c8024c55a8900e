//! Message-passing support detection.
//!
//! Each real component of `y = √γ_s S_norm X + W` is treated as a system
//! over binary activity variables `x_k ∈ {0, 1}`, written in spin form
//! `2x_k − 1` through the residual `r = 2 γ_s^(−1/2) y − C·1`. Beliefs are
//! passed in the tanh domain:
//!
//! ```text
//! m_kμ   = tanh(Λ/2 + Σ_{ν∈∂k\μ} atanh m̂_νk)
//! A      = [4/γ_s + (1/L) Σ_μ |∂μ| Σ_{j∈∂μ} c_μj² (1 − m_jμ²)]⁻¹
//! m̂_μk   = tanh(A c_μk (r_μ − Σ_{j∈∂μ\k} c_μj m_jμ))
//! ```
//!
//! with prior `Λ = −ln(2^l − 1)`. For the ternary columns
//! `c_μk = s_μk / √(M_s(1−q)q)` the bracket in `A` is exactly
//! `4/γ_s + L₂(1 − Q)/(M_s(1−q)q L)` with
//! `Q = (1/L₂) Σ_μ |∂μ| Σ_{j∈∂μ} m_jμ²`. Supplying per-block complex gains
//! scales the edge weights by the gain's real or imaginary part, which lets
//! the same recursion detect codewords that arrive with arbitrary fading.
//!
//! Only `atanh m̂` is stored per edge; clamping its argument to
//! `±atanh(1 − ε)` keeps every belief in `[−1 + ε, 1 − ε]`.

use num_complex::Complex64;

use super::graph::FactorGraph;
use crate::channel::Observation;
use crate::{Error, Result};

/// Belief clamp `ε`.
pub const BELIEF_EPS: f64 = 1e-12;

fn llr_limit() -> f64 {
    (1.0 - BELIEF_EPS).atanh()
}

/// `tanh` through one `exp`, clamped to the belief range.
#[inline]
fn belief(x: f64) -> f64 {
    let e = (-2.0 * x.abs()).exp();
    ((1.0 - e) / (1.0 + e)).min(1.0 - BELIEF_EPS).copysign(x)
}

/// Result of one message-passing run over both components.
#[derive(Clone, Debug)]
pub struct BpOutput {
    /// Final belief per column, real component.
    pub beliefs_re: Vec<f64>,
    /// Final belief per column, imaginary component.
    pub beliefs_im: Vec<f64>,
    /// Chosen offset per block.
    pub messages: Vec<usize>,
    /// Combined activity score `P_re + P_im ∈ [0, 2]` of the chosen column.
    pub scores: Vec<f64>,
    /// Per-component `max_j |m_j|` within each block.
    pub raw_beliefs: Vec<[f64; 2]>,
    /// Edge-message updates performed (both phases, both components).
    pub edge_updates: u64,
    /// `A^t` per iteration, per component.
    pub a_trace: [Vec<f64>; 2],
}

impl BpOutput {
    /// `P(x_k = 1)` summed over the two components.
    pub fn column_score(&self, k: usize) -> f64 {
        1.0 + 0.5 * (self.beliefs_re[k] + self.beliefs_im[k])
    }
}

/// Runs the recursion with unit block gains.
pub fn decode_bp(obs: &Observation, iterations: usize) -> Result<BpOutput> {
    let graph = FactorGraph::from_observation(obs);
    decode_bp_on_graph(obs, &graph, None, iterations)
}

/// Runs the recursion with each block's columns scaled by a complex gain.
pub fn decode_bp_with_gains(obs: &Observation, gains: &[Complex64], iterations: usize) -> Result<BpOutput> {
    if gains.len() != obs.blocks() {
        return Err(Error::Decoder(format!("{} gains for {} blocks", gains.len(), obs.blocks())));
    }
    let graph = FactorGraph::from_observation(obs);
    decode_bp_on_graph(obs, &graph, Some(gains), iterations)
}

pub(crate) fn decode_bp_on_graph(
    obs: &Observation,
    graph: &FactorGraph,
    gains: Option<&[Complex64]>,
    iterations: usize,
) -> Result<BpOutput> {
    if !(obs.gamma_s > 0.0) {
        return Err(Error::Decoder(format!("effective SNR must be positive, got {}", obs.gamma_s)));
    }
    if iterations == 0 {
        return Err(Error::Decoder("at least one iteration is required".into()));
    }
    if obs.is_empty() || graph.edge_count() == 0 {
        return Err(Error::Decoder("observation has an empty factor graph".into()));
    }
    let block = obs.block_size();
    let scale = obs.column_scale();
    let y_scale = 2.0 / obs.gamma_s.sqrt();
    let half_prior = -0.5 * ((block - 1) as f64).ln();

    let mut runs = Vec::with_capacity(2);
    for part in 0..2 {
        let weights: Vec<f64> = graph
            .edge_signs()
            .iter()
            .zip(graph.edge_cols())
            .map(|(&s, &k)| {
                let g = match gains {
                    None => 1.0,
                    Some(g) => {
                        let g = g[k as usize / block];
                        if part == 0 {
                            g.re
                        } else {
                            g.im
                        }
                    }
                };
                s as f64 * scale * g
            })
            .collect();
        let residual: Vec<f64> = (0..graph.rows())
            .map(|mu| {
                let y = if part == 0 { obs.received[mu].re } else { obs.received[mu].im };
                let row_sum: f64 = graph.row_edges(mu).map(|e| weights[e]).sum();
                y_scale * y - row_sum
            })
            .collect();
        runs.push(run_component(graph, &weights, &residual, obs.gamma_s, half_prior, iterations));
    }
    let (re, im) = (runs.remove(0), runs.remove(0));

    let blocks = obs.blocks();
    let mut messages = Vec::with_capacity(blocks);
    let mut scores = Vec::with_capacity(blocks);
    let mut raw_beliefs = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let range = b * block..(b + 1) * block;
        let mut best = (0, f64::NEG_INFINITY);
        for (j, k) in range.clone().enumerate() {
            let s = 1.0 + 0.5 * (re.beliefs[k] + im.beliefs[k]);
            // strict comparison: ties go to the lowest offset
            if s > best.1 {
                best = (j, s);
            }
        }
        messages.push(best.0);
        scores.push(best.1);
        let max_abs = |v: &[f64]| v[range.clone()].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        raw_beliefs.push([max_abs(&re.beliefs), max_abs(&im.beliefs)]);
    }

    Ok(BpOutput {
        edge_updates: re.edge_updates + im.edge_updates,
        beliefs_re: re.beliefs,
        beliefs_im: im.beliefs,
        messages,
        scores,
        raw_beliefs,
        a_trace: [re.a_trace, im.a_trace],
    })
}

struct ComponentRun {
    beliefs: Vec<f64>,
    edge_updates: u64,
    a_trace: Vec<f64>,
}

fn run_component(
    graph: &FactorGraph,
    weights: &[f64],
    residual: &[f64],
    gamma_s: f64,
    half_prior: f64,
    iterations: usize,
) -> ComponentRun {
    let limit = llr_limit();
    let edges = graph.edge_count();
    let cols = graph.edge_cols();
    // atanh of measurement-to-symbol messages; m̂⁰ = 0
    let mut llr_hat = vec![0.0f64; edges];
    // symbol-to-measurement messages
    let mut m = vec![0.0f64; edges];
    let mut total = vec![0.0f64; graph.cols()];
    let mut a_trace = Vec::with_capacity(iterations.saturating_sub(1));
    let mut edge_updates = 0u64;

    let rows = graph.rows();
    let mut row_sum = vec![0.0f64; rows];
    for _ in 1..iterations {
        total.iter_mut().for_each(|t| *t = 0.0);
        for (e, &k) in cols.iter().enumerate() {
            total[k as usize] += llr_hat[e];
        }

        // symbol-to-measurement messages, row by row, gathering what A needs
        let mut spread = 0.0;
        for mu in 0..rows {
            let r = graph.row_edges(mu);
            let deg = r.len() as f64;
            let (mut sm, mut v) = (0.0, 0.0);
            for e in r {
                let x = (half_prior + total[cols[e] as usize] - llr_hat[e]).clamp(-limit, limit);
                let me = belief(x);
                m[e] = me;
                let w = weights[e];
                sm += w * me;
                v += w * w * (1.0 - me * me);
            }
            row_sum[mu] = sm;
            spread += deg * v;
        }
        let a = 1.0 / (4.0 / gamma_s + spread / graph.l1());
        a_trace.push(a);

        for mu in 0..rows {
            let rho = residual[mu] - row_sum[mu];
            for e in graph.row_edges(mu) {
                let w = weights[e];
                llr_hat[e] = (a * w * (rho + w * m[e])).clamp(-limit, limit);
            }
        }
        edge_updates += 2 * edges as u64;
    }

    total.iter_mut().for_each(|t| *t = 0.0);
    for (e, &k) in cols.iter().enumerate() {
        total[k as usize] += llr_hat[e];
    }
    let beliefs = total.iter().map(|t| belief((half_prior + t).clamp(-limit, limit))).collect();
    ComponentRun { beliefs, edge_updates, a_trace }
}
