//! Recovering neighbor messages and link amplitudes from one observation.
//!
//! [`decode`] is the full receive chain used by the simulator:
//!
//! 1. greedy acquisition picks one column per block and fits its complex gain
//!    (skipped in [`DecoderMode::Literal`]),
//! 2. message passing ([`decode_bp_with_gains`], or [`decode_bp`] with unit
//!    gains) scores every column; the best column per block is the decoded
//!    message,
//! 3. least squares on the decoded support gives the amplitude estimates used
//!    for ranging.
//!
//! [`oracle_decode`] is the brute-force reference for small instances.

mod acquire;
mod bp;
mod graph;
mod lsq;
mod oracle;

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::Observation;
use crate::Result;

pub use acquire::{acquire, Acquisition};
pub use bp::{decode_bp, decode_bp_with_gains, BpOutput, BELIEF_EPS};
pub use graph::FactorGraph;
pub use lsq::{refine_amplitudes, Refinement};
pub use oracle::{oracle_decode, OracleSolution, ORACLE_LIMIT};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderMode {
    /// Message passing on the raw signature matrix, every block at unit gain.
    Literal,
    /// Acquire per-block gains first and run message passing on the
    /// gain-scaled columns.
    #[default]
    GainCompensated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderConfig {
    pub mode: DecoderMode,
    /// Message-passing iterations `T`.
    pub iterations: usize,
    /// Combined-score threshold for declaring a block active.
    pub heard_threshold: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig { mode: DecoderMode::default(), iterations: 10, heard_threshold: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecision {
    pub neighbor: u32,
    pub message_index: usize,
    /// Combined activity score in `[0, 2]`.
    pub belief_score: f64,
    /// Per-component `max |m|` over the block.
    pub raw_belief: [f64; 2],
    pub refined_amplitude: Complex64,
    pub heard: bool,
    pub amplitude_fallback: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutput {
    pub blocks: Vec<BlockDecision>,
    pub edge_updates: u64,
}

impl DecodeOutput {
    /// One line per block; scores to six decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, b) in self.blocks.iter().enumerate() {
            let _ = writeln!(
                out,
                "block {i} neighbor {} message {} score {:.6} heard {}",
                b.neighbor,
                b.message_index,
                b.belief_score,
                u8::from(b.heard)
            );
        }
        out
    }
}

/// Full receive chain for one observation.
pub fn decode(obs: &Observation, config: &DecoderConfig) -> Result<DecodeOutput> {
    let graph = FactorGraph::from_observation(obs);
    let bp = match config.mode {
        DecoderMode::Literal => bp::decode_bp_on_graph(obs, &graph, None, config.iterations)?,
        DecoderMode::GainCompensated => {
            let acq = acquire(obs, &graph)?;
            bp::decode_bp_on_graph(obs, &graph, Some(&acq.gains), config.iterations)?
        }
    };
    let support: Vec<Option<usize>> = bp.messages.iter().copied().map(Some).collect();
    let refined = refine_amplitudes(obs, &support)?;
    let blocks = obs
        .block_map
        .iter()
        .enumerate()
        .map(|(b, &neighbor)| BlockDecision {
            neighbor,
            message_index: bp.messages[b],
            belief_score: bp.scores[b],
            raw_belief: bp.raw_beliefs[b],
            refined_amplitude: refined.amplitudes[b],
            heard: bp.scores[b] >= config.heard_threshold,
            amplitude_fallback: refined.fallback,
        })
        .collect();
    Ok(DecodeOutput { blocks, edge_updates: bp.edge_updates })
}
