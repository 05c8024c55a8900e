use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{pair_index, Fading, Network, Node, Role};
use crate::{Point, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FadingRecord {
    pub i: u32,
    pub j: u32,
    pub re: f64,
    pub im: f64,
}

/// JSON form of a [`Network`] for scenario replay. Neighbor sets are derived
/// on load, so only geometry and fading are stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub area_side: f64,
    pub path_loss_exponent: f64,
    pub neighbor_threshold: f64,
    pub nodes: Vec<NodeRecord>,
    pub fading: Vec<FadingRecord>,
}

impl NetworkDocument {
    pub fn from_network(net: &Network) -> Self {
        let n = net.len();
        let nodes = net
            .nodes()
            .iter()
            .map(|nd| NodeRecord { id: nd.id, x: nd.position.x, y: nd.position.y, role: nd.role })
            .collect();
        let mut fading = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n as u32 {
            for j in i + 1..n as u32 {
                let h = net.fading_coefficient(i, j);
                fading.push(FadingRecord { i, j, re: h.re, im: h.im });
            }
        }
        NetworkDocument {
            area_side: net.area_side(),
            path_loss_exponent: net.path_loss_exponent(),
            neighbor_threshold: net.neighbor_threshold(),
            nodes,
            fading,
        }
    }

    pub fn into_network(self) -> Result<Network> {
        let n = self.nodes.len();
        let nodes: Vec<Node> = self
            .nodes
            .into_iter()
            .map(|r| Node { id: r.id, position: Point::new(r.x, r.y), role: r.role })
            .collect();
        let mut values = vec![Complex64::new(f64::NAN, f64::NAN); n * n.saturating_sub(1) / 2];
        for rec in &self.fading {
            let (lo, hi) = (rec.i.min(rec.j) as usize, rec.i.max(rec.j) as usize);
            if lo == hi || hi >= n {
                return Err(crate::Error::Config(format!("bad fading pair ({}, {})", rec.i, rec.j)));
            }
            values[pair_index(n, lo, hi)] = Complex64::new(rec.re, rec.im);
        }
        if values.iter().any(|v| v.re.is_nan()) {
            return Err(crate::Error::Config("fading table is missing node pairs".into()));
        }
        Network::from_parts(
            self.area_side,
            self.path_loss_exponent,
            self.neighbor_threshold,
            nodes,
            Fading::Table { n, values },
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
