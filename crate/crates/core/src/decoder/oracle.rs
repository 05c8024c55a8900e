//! Exhaustive maximum-likelihood decoding for small instances.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::lsq::model_column;
use crate::channel::Observation;
use crate::{Error, Result};

/// Hypothesis-count ceiling for [`oracle_decode`].
pub const ORACLE_LIMIT: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub messages: Vec<usize>,
    pub amplitudes: Vec<Complex64>,
    /// Squared residual norm of the best hypothesis.
    pub residual: f64,
    /// Another hypothesis fits equally well (within relative 1e-9).
    pub ambiguous: bool,
}

/// Tries every combination of one codeword per block, fits amplitudes by
/// least squares, and keeps the smallest residual: the maximum-likelihood
/// support under white Gaussian noise.
pub fn oracle_decode(obs: &Observation) -> Result<OracleSolution> {
    let blocks = obs.blocks();
    let block = obs.block_size();
    let hypotheses = (block as u128).checked_pow(blocks as u32).unwrap_or(u128::MAX);
    if hypotheses > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge(hypotheses));
    }
    if obs.is_empty() {
        return Err(Error::Decoder("observation is empty".into()));
    }
    let m = obs.rows();
    let columns: Vec<Vec<f64>> = (0..obs.cols()).map(|k| model_column(obs, k)).collect();
    let y_re = DVector::from_iterator(m, obs.received.iter().map(|y| y.re));
    let y_im = DVector::from_iterator(m, obs.received.iter().map(|y| y.im));

    let mut pick = vec![0usize; blocks];
    let mut best: Option<OracleSolution> = None;
    let mut ties = 0usize;
    loop {
        let a = DMatrix::from_fn(m, blocks, |i, b| columns[b * block + pick[b]][i]);
        let svd = a.clone().svd(true, true);
        let eps = 1e-10 * svd.singular_values.max().max(f64::MIN_POSITIVE);
        let (x_re, x_im) = match (svd.solve(&y_re, eps), svd.solve(&y_im, eps)) {
            (Ok(r), Ok(i)) => (r, i),
            _ => return Err(Error::Decoder("least-squares solve failed".into())),
        };
        let res = (&y_re - &a * &x_re).norm_squared() + (&y_im - &a * &x_im).norm_squared();

        match &best {
            Some(b) if (res - b.residual).abs() <= 1e-9 * res.max(b.residual) + 1e-18 => ties += 1,
            Some(b) if res >= b.residual => {}
            _ => {
                ties = 0;
                best = Some(OracleSolution {
                    messages: pick.clone(),
                    amplitudes: x_re.iter().zip(x_im.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect(),
                    residual: res,
                    ambiguous: false,
                });
            }
        }

        // advance the mixed-radix counter
        let mut b = 0;
        while b < blocks {
            pick[b] += 1;
            if pick[b] < block {
                break;
            }
            pick[b] = 0;
            b += 1;
        }
        if b == blocks {
            break;
        }
    }
    let mut sol = best.expect("at least one hypothesis");
    sol.ambiguous = ties > 0;
    Ok(sol)
}
