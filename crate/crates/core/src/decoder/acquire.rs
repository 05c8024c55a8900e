//! Greedy gain acquisition.
//!
//! Picks, one block at a time, the column whose normalized correlation with
//! the current residual is strongest, refits every selected amplitude jointly,
//! and subtracts the fit. Strong neighbors are therefore cancelled before weak
//! ones are searched for. The outcome seeds the gain-compensated message
//! passing.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::graph::FactorGraph;
use crate::channel::Observation;
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Acquisition {
    /// Selected offset per block.
    pub offsets: Vec<usize>,
    /// Least-squares amplitude per block on the selected support.
    pub gains: Vec<Complex64>,
}

pub fn acquire(obs: &Observation, graph: &FactorGraph) -> Result<Acquisition> {
    let blocks = obs.blocks();
    let block = obs.block_size();
    let m = obs.rows();
    let col_scale = obs.gamma_s.sqrt() * obs.column_scale();

    let mut energy = vec![0.0f64; graph.cols()];
    for &k in graph.edge_cols() {
        energy[k as usize] += 1.0;
    }

    let mut residual = obs.received.clone();
    let mut taken = vec![false; blocks];
    let mut offsets = vec![0usize; blocks];
    let mut order: Vec<usize> = Vec::with_capacity(blocks);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(blocks);
    let mut corr = vec![Complex64::new(0.0, 0.0); graph.cols()];
    let mut fit: Vec<Complex64> = Vec::new();

    for _ in 0..blocks {
        corr.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (mu, r) in residual.iter().enumerate() {
            for e in graph.row_edges(mu) {
                let k = graph.edge_col(e);
                if graph.edge_sign(e) > 0 {
                    corr[k] += r;
                } else {
                    corr[k] -= r;
                }
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for b in (0..blocks).filter(|&b| !taken[b]) {
            for k in b * block..(b + 1) * block {
                let score = if energy[k] > 0.0 { corr[k].norm_sqr() / energy[k] } else { 0.0 };
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((k, score));
                }
            }
        }
        let Some((k, _)) = best else { break };
        let b = k / block;
        taken[b] = true;
        offsets[b] = k % block;
        order.push(b);
        columns.push(
            (0..m).map(|mu| obs.entry(mu, k) as f64 * col_scale).collect(),
        );

        fit = least_squares(&columns, &obs.received);
        residual.clone_from(&obs.received);
        for (col, a) in columns.iter().zip(&fit) {
            for (r, c) in residual.iter_mut().zip(col) {
                *r -= a * *c;
            }
        }
    }

    let mut gains = vec![Complex64::new(0.0, 0.0); blocks];
    for (b, a) in order.iter().zip(fit) {
        gains[*b] = a;
    }
    Ok(Acquisition { offsets, gains })
}

/// Minimum-norm least squares over real columns with a complex right-hand side.
fn least_squares(columns: &[Vec<f64>], y: &[Complex64]) -> Vec<Complex64> {
    let m = y.len();
    let p = columns.len();
    let a = DMatrix::from_fn(m, p, |i, j| columns[j][i]);
    let svd = a.svd(true, true);
    let eps = 1e-10 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    let y_re = DVector::from_iterator(m, y.iter().map(|v| v.re));
    let y_im = DVector::from_iterator(m, y.iter().map(|v| v.im));
    match (svd.solve(&y_re, eps), svd.solve(&y_im, eps)) {
        (Ok(re), Ok(im)) => re.iter().zip(im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect(),
        _ => vec![Complex64::new(0.0, 0.0); p],
    }
}
