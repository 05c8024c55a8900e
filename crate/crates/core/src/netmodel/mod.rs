//! Random network model.
//!
//! Nodes are a Poisson point process on `[0, A]²` conditioned on the node
//! count. Every unordered pair carries a static Rayleigh fading coefficient
//! `h_ij = h_ji ~ CN(0, 1)`, and `j` is a neighbor of `i` when the channel gain
//! `|h_ij|² ‖z_i − z_j‖^(−α)` reaches the threshold `θ`.

mod document;
pub mod montecarlo;
mod stats;

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Point, Result};

pub use document::NetworkDocument;
pub use stats::{
    interference_variance, mean_neighbor_count, neighbor_amplitude_cdf, neighbor_amplitude_pdf,
};

/// Largest fading power the keyed generator can produce: `−ln(2⁻⁵³)`.
pub const MAX_KEYED_FADING_POWER: f64 = 53.0 * std::f64::consts::LN_2;

const FADING_TAG: u64 = 0x6661_6469_6e67;
const GEOMETRY_TAG: u64 = 0x6765_6f6d;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Anchor,
    Client,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum AnchorLayout {
    /// Anchors at the centers of a `rows × cols` grid of equal cells.
    Lattice { rows: usize, cols: usize },
    /// The first `count` uniformly drawn nodes become anchors.
    Random { count: usize },
}

impl AnchorLayout {
    pub fn anchor_count(&self) -> usize {
        match *self {
            AnchorLayout::Lattice { rows, cols } => rows * cols,
            AnchorLayout::Random { count } => count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Side `A` of the deployment square, meters.
    pub area_side: f64,
    pub node_count: usize,
    pub anchor_layout: AnchorLayout,
    /// Path-loss exponent `α`.
    pub path_loss_exponent: f64,
    /// Neighbor threshold `θ` on the linear channel gain.
    pub neighbor_threshold: f64,
    pub geometry_seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig::reference()
    }
}

impl NetworkConfig {
    /// The 100-node, 4×4-lattice deployment used throughout the evaluation.
    pub fn reference() -> Self {
        NetworkConfig {
            area_side: 50.0,
            node_count: 100,
            anchor_layout: AnchorLayout::Lattice { rows: 4, cols: 4 },
            path_loss_exponent: 3.0,
            neighbor_threshold: 1e-3,
            geometry_seed: 1,
        }
    }

    /// Node intensity `λ = n / A²`.
    pub fn intensity(&self) -> f64 {
        self.node_count as f64 / (self.area_side * self.area_side)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area_side > 0.0 && self.area_side.is_finite()) {
            return Err(Error::Config(format!("area_side must be positive, got {}", self.area_side)));
        }
        if !(self.path_loss_exponent > 2.0) {
            return Err(Error::DivergentInterference(self.path_loss_exponent));
        }
        if !(self.neighbor_threshold > 0.0) {
            return Err(Error::Config(format!(
                "neighbor_threshold must be positive, got {}",
                self.neighbor_threshold
            )));
        }
        let anchors = self.anchor_layout.anchor_count();
        if anchors > self.node_count {
            return Err(Error::Config(format!(
                "{anchors} anchors requested but only {} nodes",
                self.node_count
            )));
        }
        if let AnchorLayout::Lattice { rows, cols } = self.anchor_layout {
            if rows == 0 || cols == 0 {
                return Err(Error::Config("anchor lattice dimensions must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: u32,
    pub position: Point,
    pub role: Role,
}

/// Source of the pairwise fading coefficients.
#[derive(Clone, Debug, PartialEq)]
pub enum Fading {
    /// Drawn on demand from a hash of `(seed, min(i, j), max(i, j))`.
    Keyed { seed: u64 },
    /// Packed upper-triangular table, as loaded from a scenario document.
    Table { n: usize, values: Vec<Complex64> },
}

impl Fading {
    pub fn coefficient(&self, i: u32, j: u32) -> Complex64 {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        match self {
            Fading::Keyed { seed } => keyed_fading(*seed, lo, hi),
            Fading::Table { n, values } => values[pair_index(*n, lo as usize, hi as usize)],
        }
    }

    fn max_power(&self) -> f64 {
        match self {
            Fading::Keyed { .. } => MAX_KEYED_FADING_POWER,
            Fading::Table { values, .. } => values.iter().map(|h| h.norm_sqr()).fold(0.0, f64::max),
        }
    }
}

/// Index of unordered pair `(lo, hi)`, `lo < hi`, in a packed upper triangle.
pub(crate) fn pair_index(n: usize, lo: usize, hi: usize) -> usize {
    debug_assert!(lo < hi && hi < n);
    lo * (2 * n - lo - 1) / 2 + (hi - lo - 1)
}

fn keyed_fading(seed: u64, lo: u32, hi: u32) -> Complex64 {
    let k = rng::key(&[seed, FADING_TAG, lo as u64, hi as u64]);
    let power = -rng::unit_open0(rng::mix64(k)).ln();
    let phase = std::f64::consts::TAU * rng::unit_closed0(rng::mix64(k ^ 0xa5a5_a5a5_a5a5_a5a5));
    Complex64::from_polar(power.sqrt(), phase)
}

/// An immutable network realization.
#[derive(Clone, Debug)]
pub struct Network {
    area_side: f64,
    path_loss_exponent: f64,
    neighbor_threshold: f64,
    nodes: Vec<Node>,
    fading: Fading,
    neighbors: Vec<Vec<u32>>,
}

impl Network {
    /// Assembles a network from explicit parts and derives the neighbor sets.
    pub fn from_parts(
        area_side: f64,
        path_loss_exponent: f64,
        neighbor_threshold: f64,
        nodes: Vec<Node>,
        fading: Fading,
    ) -> Result<Self> {
        for (idx, node) in nodes.iter().enumerate() {
            if node.id as usize != idx {
                return Err(Error::Config(format!(
                    "node ids must be 0..n in order; found id {} at position {idx}",
                    node.id
                )));
            }
        }
        if let Fading::Table { n, values } = &fading {
            if *n != nodes.len() || values.len() != n * n.saturating_sub(1) / 2 {
                return Err(Error::Config("fading table does not cover every node pair".into()));
            }
        }
        if !(path_loss_exponent > 0.0 && neighbor_threshold > 0.0) {
            return Err(Error::Config("path-loss exponent and threshold must be positive".into()));
        }
        let mut net = Network {
            area_side,
            path_loss_exponent,
            neighbor_threshold,
            nodes,
            fading,
            neighbors: Vec::new(),
        };
        net.neighbors = net.compute_neighbors();
        Ok(net)
    }

    pub fn area_side(&self) -> f64 {
        self.area_side
    }

    pub fn path_loss_exponent(&self) -> f64 {
        self.path_loss_exponent
    }

    pub fn neighbor_threshold(&self) -> f64 {
        self.neighbor_threshold
    }

    pub fn intensity(&self) -> f64 {
        self.nodes.len() as f64 / (self.area_side * self.area_side)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: u32) -> Result<&Node> {
        self.nodes.get(id as usize).ok_or(Error::UnknownNode(id))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn fading(&self) -> &Fading {
        &self.fading
    }

    /// Sorted neighbor ids of `id`.
    pub fn neighbors(&self, id: u32) -> &[u32] {
        &self.neighbors[id as usize]
    }

    pub fn fading_coefficient(&self, i: u32, j: u32) -> Complex64 {
        self.fading.coefficient(i, j)
    }

    /// `|h_ij|²`.
    pub fn fading_power(&self, i: u32, j: u32) -> f64 {
        self.fading.coefficient(i, j).norm_sqr()
    }

    /// `|h_ij|² ‖z_i − z_j‖^(−α)`.
    pub fn channel_gain(&self, i: u32, j: u32) -> f64 {
        let d2 = self.nodes[i as usize].position.dist2(self.nodes[j as usize].position);
        self.fading_power(i, j) * d2.powf(-self.path_loss_exponent / 2.0)
    }

    pub fn anchors(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.role == Role::Anchor)
    }

    pub fn clients(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.role == Role::Client)
    }

    fn compute_neighbors(&self) -> Vec<Vec<u32>> {
        let n = self.nodes.len();
        let mut out = vec![Vec::new(); n];
        if n < 2 {
            return out;
        }
        // No pair farther apart than this can pass the threshold test.
        let reach = (self.fading.max_power() / self.neighbor_threshold).powf(1.0 / self.path_loss_exponent);
        let (min_x, min_y, max_x, max_y) = self.nodes.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), nd| {
                (a.min(nd.position.x), b.min(nd.position.y), c.max(nd.position.x), d.max(nd.position.y))
            },
        );
        let span = (max_x - min_x).max(max_y - min_y).max(f64::MIN_POSITIVE);
        let cells = ((span / reach).floor() as usize).clamp(1, 2048);
        let cell = span / cells as f64;
        let cell_of = |p: Point| {
            let cx = (((p.x - min_x) / cell) as usize).min(cells - 1);
            let cy = (((p.y - min_y) / cell) as usize).min(cells - 1);
            (cx, cy)
        };
        let mut grid: Vec<Vec<u32>> = vec![Vec::new(); cells * cells];
        for nd in &self.nodes {
            let (cx, cy) = cell_of(nd.position);
            grid[cy * cells + cx].push(nd.id);
        }
        for nd in &self.nodes {
            let (cx, cy) = cell_of(nd.position);
            for gy in cy.saturating_sub(1)..=(cy + 1).min(cells - 1) {
                for gx in cx.saturating_sub(1)..=(cx + 1).min(cells - 1) {
                    for &other in &grid[gy * cells + gx] {
                        if other > nd.id && self.channel_gain(nd.id, other) >= self.neighbor_threshold {
                            out[nd.id as usize].push(other);
                            out[other as usize].push(nd.id);
                        }
                    }
                }
            }
        }
        for list in &mut out {
            list.sort_unstable();
        }
        out
    }
}

/// Draws a network realization; bit-deterministic in `config.geometry_seed`.
pub fn generate_network(config: &NetworkConfig) -> Result<Network> {
    config.validate()?;
    let a = config.area_side;
    let mut rng = rng::stream(&[config.geometry_seed, GEOMETRY_TAG]);
    let mut positions: Vec<Point> = (0..config.node_count)
        .map(|_| Point::new(rng.gen::<f64>() * a, rng.gen::<f64>() * a))
        .collect();
    let mut roles = vec![Role::Client; config.node_count];
    match config.anchor_layout {
        AnchorLayout::Lattice { rows, cols } => {
            let (dx, dy) = (a / cols as f64, a / rows as f64);
            for r in 0..rows {
                for c in 0..cols {
                    let id = r * cols + c;
                    positions[id] = Point::new((c as f64 + 0.5) * dx, (r as f64 + 0.5) * dy);
                    roles[id] = Role::Anchor;
                }
            }
        }
        AnchorLayout::Random { count } => {
            for id in index::sample(&mut rng, config.node_count, count).iter() {
                roles[id] = Role::Anchor;
            }
        }
    }
    let nodes = positions
        .into_iter()
        .zip(roles)
        .enumerate()
        .map(|(id, (position, role))| Node { id: id as u32, position, role })
        .collect();
    Network::from_parts(
        a,
        config.path_loss_exponent,
        config.neighbor_threshold,
        nodes,
        Fading::Keyed { seed: rng::key(&[config.geometry_seed, FADING_TAG]) },
    )
}

/// Complex link amplitude `U_ij = h_ij ‖z_i − z_j‖^(−α/2)`.
pub fn channel_coefficient(network: &Network, i: u32, j: u32) -> Result<Complex64> {
    let zi = network.node(i)?.position;
    let zj = network.node(j)?.position;
    let d2 = zi.dist2(zj);
    if i == j || d2 == 0.0 {
        return Err(Error::DegenerateGeometry(i, j));
    }
    Ok(network.fading_coefficient(i, j) * d2.powf(-network.path_loss_exponent / 4.0))
}
