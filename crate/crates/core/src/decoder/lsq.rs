//! Least-squares amplitude fitting on a known support.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::channel::Observation;
use crate::{Error, Result};

/// Relative singular-value floor below which a support is treated as
/// rank-deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    /// Estimated `U` per block; zero for blocks without a selected column.
    pub amplitudes: Vec<Complex64>,
    /// Set when the joint solve was rank-deficient and every block fell back
    /// to its own matched-filter estimate.
    pub fallback: bool,
}

/// Model column `√γ_s S_norm[:, k]` over the visible rows.
pub(crate) fn model_column(obs: &Observation, k: usize) -> Vec<f64> {
    let s = obs.gamma_s.sqrt() * obs.column_scale();
    (0..obs.rows()).map(|mu| obs.entry(mu, k) as f64 * s).collect()
}

/// Fits `received ≈ √γ_s S_norm|support · a` by least squares.
///
/// `support[b]` is the selected offset within block `b`, or `None` to leave
/// the block out of the fit.
pub fn refine_amplitudes(obs: &Observation, support: &[Option<usize>]) -> Result<Refinement> {
    if support.len() != obs.blocks() {
        return Err(Error::Decoder(format!("support covers {} of {} blocks", support.len(), obs.blocks())));
    }
    let block = obs.block_size();
    let chosen: Vec<(usize, usize)> = support
        .iter()
        .enumerate()
        .filter_map(|(b, off)| off.map(|o| (b, b * block + o)))
        .collect();
    if let Some(&(_, k)) = chosen.iter().find(|(b, k)| *k >= (b + 1) * block) {
        return Err(Error::Decoder(format!("column {k} outside its block")));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); obs.blocks()];
    if chosen.is_empty() || obs.rows() == 0 {
        return Ok(Refinement { amplitudes, fallback: false });
    }

    let m = obs.rows();
    let columns: Vec<Vec<f64>> = chosen.iter().map(|&(_, k)| model_column(obs, k)).collect();
    let a = DMatrix::from_fn(m, columns.len(), |i, j| columns[j][i]);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let deficient = columns.len() > m || !(smax > 0.0) || smin <= RANK_TOL * smax;

    if deficient {
        for ((b, _), col) in chosen.iter().zip(&columns) {
            amplitudes[*b] = matched_filter(col, &obs.received);
        }
        return Ok(Refinement { amplitudes, fallback: true });
    }

    let y_re = DVector::from_iterator(m, obs.received.iter().map(|y| y.re));
    let y_im = DVector::from_iterator(m, obs.received.iter().map(|y| y.im));
    let eps = RANK_TOL * smax;
    let x_re = svd.solve(&y_re, eps).map_err(|e| Error::Decoder(e.to_string()))?;
    let x_im = svd.solve(&y_im, eps).map_err(|e| Error::Decoder(e.to_string()))?;
    for (idx, (b, _)) in chosen.iter().enumerate() {
        amplitudes[*b] = Complex64::new(x_re[idx], x_im[idx]);
    }
    Ok(Refinement { amplitudes, fallback: false })
}

fn matched_filter(col: &[f64], y: &[Complex64]) -> Complex64 {
    let energy: f64 = col.iter().map(|c| c * c).sum();
    if energy == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    col.iter().zip(y).map(|(c, y)| y * *c).sum::<Complex64>() / energy
}
