//! The iterative localization protocol.
//!
//! Every iteration spans two frames. In the first, each transmitting node
//! sends the quantized x coordinate of its current estimate; in the second,
//! the y coordinate. Every client decodes both frames, turns the heard
//! neighbors into range constraints and re-solves its position. During the
//! first `stage1_iterations` iterations only anchors and clients that have
//! already heard at least three neighbors transmit; afterwards everyone does.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{observe, ChannelParams, NoiseMode};
use crate::codec::{dequantize, Codebook, QuantizedLocation};
use crate::decoder::{decode, DecodeOutput, DecoderConfig, DecoderMode};
use crate::locator::{estimate_distance, solve_location, Confidence, RangeConstraint, SolverOptions};
use crate::netmodel::{generate_network, Network, NetworkConfig, Role};
use crate::{rng, Error, Point, Result};

/// Constraints needed before a client trusts its own solution.
pub const MIN_CONSTRAINTS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub network: NetworkConfig,
    /// Bits per coordinate, `l`.
    pub bits: u32,
    /// Symbols per frame, `M_s`.
    pub frame_length: usize,
    pub duty_cycle: f64,
    pub bp_iterations: usize,
    pub stage1_iterations: usize,
    pub total_iterations: usize,
    pub snr_db: f64,
    pub noise_mode: NoiseMode,
    /// Combined-score threshold a block must pass in both frames.
    pub heard_threshold: f64,
    pub run_seed: u64,
    pub codebook_salt: u64,
    pub decoder_mode: DecoderMode,
    /// Let clients with fewer than three heard neighbors re-solve anyway.
    pub update_underdetermined: bool,
    /// Refine each fix against the unrelaxed objective.
    pub polish: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            network: NetworkConfig::reference(),
            bits: 8,
            frame_length: 600,
            duty_cycle: 0.5,
            bp_iterations: 10,
            stage1_iterations: 7,
            total_iterations: 20,
            snr_db: 30.0,
            noise_mode: NoiseMode::Analytic,
            heard_threshold: 0.5,
            run_seed: 1,
            codebook_salt: 0,
            decoder_mode: DecoderMode::GainCompensated,
            update_underdetermined: false,
            polish: false,
        }
    }
}

impl SimConfig {
    /// The smaller profile used for quick runs: 50 nodes, `l = 6`, `M_s = 300`.
    pub fn ci_profile() -> Self {
        let mut cfg = SimConfig::default();
        cfg.network.node_count = 50;
        cfg.bits = 6;
        cfg.frame_length = 300;
        cfg
    }

    /// Uses `seed` for both the geometry and the run.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.network.geometry_seed = seed;
        self.run_seed = seed;
        self
    }

    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    pub fn decoder(&self) -> DecoderConfig {
        DecoderConfig { mode: self.decoder_mode, iterations: self.bp_iterations, heard_threshold: self.heard_threshold }
    }

    /// Symbol intervals consumed by one iteration.
    pub fn symbols_per_iteration(&self) -> usize {
        2 * self.frame_length
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.bits == 0 || self.bits > 16 {
            return Err(Error::Config(format!("bits must be in 1..=16, got {}", self.bits)));
        }
        if self.frame_length == 0 {
            return Err(Error::Config("frame_length must be positive".into()));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle < 1.0) {
            return Err(Error::Config(format!("duty_cycle must be in (0, 1), got {}", self.duty_cycle)));
        }
        if self.bp_iterations == 0 {
            return Err(Error::Config("bp_iterations must be at least 1".into()));
        }
        if self.stage1_iterations > self.total_iterations {
            return Err(Error::Config(format!(
                "stage1_iterations ({}) exceeds total_iterations ({})",
                self.stage1_iterations, self.total_iterations
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        if !(self.heard_threshold >= 0.0 && self.heard_threshold <= 2.0) {
            return Err(Error::Config(format!("heard_threshold must be in [0, 2], got {}", self.heard_threshold)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeState {
    pub id: u32,
    pub role: Role,
    pub estimate: Point,
    pub heard_count_last: usize,
    pub has_transmitted: bool,
    /// Whether the client has adopted a solution at least once.
    pub solved: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeSnapshot {
    pub id: u32,
    pub role: Role,
    pub truth: Point,
    pub estimate: Point,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub transmitter_count: usize,
    /// Mean client error, meters; zero when there are no clients.
    pub average_error: f64,
    pub count_within_1m: usize,
    /// Clients that re-solved this iteration.
    pub updated: usize,
    /// Clients that heard fewer than three neighbors.
    pub underdetermined: usize,
    pub nodes: Vec<NodeSnapshot>,
}

/// Everything fixed for the length of a run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: SimConfig,
    pub network: Network,
    pub codebooks: Vec<Codebook>,
    pub params: ChannelParams,
}

impl Scenario {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let network = generate_network(&config.network)?;
        Scenario::with_network(config, network)
    }

    pub fn with_network(config: SimConfig, network: Network) -> Result<Self> {
        config.validate()?;
        let codebooks = network
            .nodes()
            .par_iter()
            .map(|n| Codebook::generate(n.id, config.bits, config.frame_length, config.duty_cycle, config.codebook_salt))
            .collect::<Result<Vec<_>>>()?;
        let params = ChannelParams::for_network(
            &network,
            config.snr_linear(),
            config.bits,
            config.frame_length,
            config.duty_cycle,
        )?;
        Ok(Scenario { config, network, codebooks, params })
    }

    /// Anchors at their true positions, clients at the origin.
    pub fn initial_state(&self) -> Vec<NodeState> {
        self.network
            .nodes()
            .iter()
            .map(|n| NodeState {
                id: n.id,
                role: n.role,
                estimate: if n.role == Role::Anchor { n.position } else { Point::ORIGIN },
                heard_count_last: 0,
                has_transmitted: false,
                solved: false,
            })
            .collect()
    }

    pub fn transmits(&self, node: &NodeState, iteration: usize) -> bool {
        match node.role {
            Role::Anchor => true,
            Role::Client => {
                iteration > self.config.stage1_iterations
                    || node.has_transmitted
                    || node.heard_count_last >= MIN_CONSTRAINTS
            }
        }
    }
}

/// Heard neighbors of one client after both frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Reception {
    pub constraints: Vec<RangeConstraint>,
    /// `(neighbor, decoded position)` for every heard neighbor.
    pub heard: Vec<(u32, Point)>,
}

/// Joins the two frame decodes of one receiver into range constraints.
pub fn combine_frames(scenario: &Scenario, receiver: u32, x_frame: &DecodeOutput, y_frame: &DecodeOutput) -> Result<Reception> {
    let net = &scenario.network;
    let cfg = &scenario.config;
    let mut constraints = Vec::new();
    let mut heard = Vec::new();
    for (bx, by) in x_frame.blocks.iter().zip(&y_frame.blocks) {
        if bx.neighbor != by.neighbor {
            return Err(Error::Decoder("frames disagree on the neighbor order".into()));
        }
        if !(bx.heard && by.heard) {
            continue;
        }
        let position = Point::new(
            dequantize(bx.message_index as u32, net.area_side(), cfg.bits),
            dequantize(by.message_index as u32, net.area_side(), cfg.bits),
        );
        let amplitude = 0.5 * (bx.refined_amplitude.norm() + by.refined_amplitude.norm());
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            continue;
        }
        let range = estimate_distance(
            amplitude,
            net.fading_power(receiver, bx.neighbor),
            net.path_loss_exponent(),
            net.neighbor_threshold(),
        )?;
        let source = net.node(bx.neighbor)?.role;
        constraints.push(RangeConstraint { neighbor_position: position, range, source });
        heard.push((bx.neighbor, position));
    }
    Ok(Reception { constraints, heard })
}

/// One protocol iteration. `iteration` counts from 1.
pub fn run_iteration(scenario: &Scenario, state: &[NodeState], iteration: usize) -> Result<(Vec<NodeState>, IterationRecord)> {
    let net = &scenario.network;
    let cfg = &scenario.config;
    if state.len() != net.len() {
        return Err(Error::Config("state does not match the network".into()));
    }
    let transmitting: Vec<bool> = state.iter().map(|s| scenario.transmits(s, iteration)).collect();
    let transmitter_count = transmitting.iter().filter(|&&t| t).count();

    let mut next = state.to_vec();
    let mut updated = 0;
    let mut underdetermined = 0;
    if transmitter_count > 0 {
        let coords: Vec<Option<QuantizedLocation>> = state
            .iter()
            .zip(&transmitting)
            .map(|(s, &t)| t.then(|| QuantizedLocation::from_point(s.estimate, net.area_side(), cfg.bits)))
            .collect();
        let frames: [Vec<Option<u32>>; 2] = [
            coords.iter().map(|c| c.map(|q| q.omega)).collect(),
            coords.iter().map(|c| c.map(|q| q.nu)).collect(),
        ];
        let seeds = [0u64, 1].map(|f| rng::key(&[cfg.run_seed, iteration as u64, f]));
        let decoder = cfg.decoder();
        let solver = SolverOptions { polish: cfg.polish, ..SolverOptions::default() };

        let outcomes = state
            .par_iter()
            .filter(|s| s.role == Role::Client)
            .map(|s| -> Result<(u32, usize, Option<Point>)> {
                if net.neighbors(s.id).is_empty() {
                    return Ok((s.id, 0, None));
                }
                let mut decoded = Vec::with_capacity(2);
                for (frame, seed) in frames.iter().zip(seeds) {
                    let obs = observe(net, &scenario.codebooks, s.id, frame, cfg.noise_mode, &scenario.params, seed)?;
                    decoded.push(decode(&obs, &decoder)?);
                }
                let rx = combine_frames(scenario, s.id, &decoded[0], &decoded[1])?;
                let count = rx.constraints.len();
                let solve = count >= MIN_CONSTRAINTS || (cfg.update_underdetermined && count > 0);
                if !solve {
                    return Ok((s.id, count, None));
                }
                let init = if s.solved {
                    s.estimate
                } else {
                    let centers: Vec<Point> = rx.constraints.iter().map(|c| c.neighbor_position).collect();
                    Point::centroid(&centers).unwrap_or(s.estimate)
                };
                let est = solve_location(&rx.constraints, init, &solver)?;
                debug_assert!(est.confidence == Confidence::Determined || cfg.update_underdetermined);
                Ok((s.id, count, Some(est.position)))
            })
            .collect::<Result<Vec<_>>>()?;

        for (id, count, position) in outcomes {
            let node = &mut next[id as usize];
            node.heard_count_last = count;
            if count < MIN_CONSTRAINTS {
                underdetermined += 1;
            }
            if let Some(p) = position {
                node.estimate = p;
                node.solved = true;
                updated += 1;
            }
        }
        for (node, &t) in next.iter_mut().zip(&transmitting) {
            node.has_transmitted |= t;
        }
    }

    let nodes = snapshot(net, &next);
    let (average_error, count_within_1m) = client_metrics(&nodes);
    Ok((
        next,
        IterationRecord { iteration, transmitter_count, average_error, count_within_1m, updated, underdetermined, nodes },
    ))
}

fn snapshot(net: &Network, state: &[NodeState]) -> Vec<NodeSnapshot> {
    net.nodes()
        .iter()
        .zip(state)
        .map(|(n, s)| NodeSnapshot {
            id: n.id,
            role: n.role,
            truth: n.position,
            estimate: s.estimate,
            error: s.estimate.dist(n.position),
        })
        .collect()
}

fn client_metrics(nodes: &[NodeSnapshot]) -> (f64, usize) {
    let (est, truth): (Vec<Point>, Vec<Point>) =
        nodes.iter().filter(|n| n.role == Role::Client).map(|n| (n.estimate, n.truth)).unzip();
    (average_error(&est, &truth).unwrap_or(0.0), count_within(&est, &truth, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutput {
    pub records: Vec<IterationRecord>,
    /// Node table after the last iteration.
    pub nodes: Vec<NodeSnapshot>,
    pub symbols_elapsed: usize,
}

impl SimOutput {
    pub fn final_average_error(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.average_error)
    }
}

pub fn run_simulation(config: &SimConfig) -> Result<SimOutput> {
    let scenario = Scenario::new(config.clone())?;
    run_scenario(&scenario)
}

pub fn run_scenario(scenario: &Scenario) -> Result<SimOutput> {
    let mut state = scenario.initial_state();
    let mut records = Vec::with_capacity(scenario.config.total_iterations);
    let mut symbols_elapsed = 0;
    for it in 1..=scenario.config.total_iterations {
        let (next, record) = run_iteration(scenario, &state, it)?;
        state = next;
        symbols_elapsed += scenario.config.symbols_per_iteration();
        records.push(record);
    }
    Ok(SimOutput { records, nodes: snapshot(&scenario.network, &state), symbols_elapsed })
}

/// Mean Euclidean distance between paired estimates and truths.
pub fn average_error(estimates: &[Point], truths: &[Point]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Empty("average_error"));
    }
    if estimates.len() != truths.len() {
        return Err(Error::Config("estimates and truths differ in length".into()));
    }
    Ok(estimates.iter().zip(truths).map(|(e, t)| e.dist(*t)).sum::<f64>() / estimates.len() as f64)
}

pub fn count_within(estimates: &[Point], truths: &[Point], radius: f64) -> usize {
    estimates.iter().zip(truths).filter(|(e, t)| e.dist(**t) <= radius).count()
}
