use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::{Error, Result};

/// Expected neighbor count of a typical node,
/// `c = (2/α) π λ θ^(−2/α) Γ(2/α)`, under unit-mean exponential fading power.
pub fn mean_neighbor_count(intensity: f64, threshold: f64, path_loss_exponent: f64) -> f64 {
    if intensity == 0.0 {
        return 0.0;
    }
    let a = path_loss_exponent;
    (2.0 / a) * PI * intensity * threshold.powf(-2.0 / a) * gamma(2.0 / a)
}

/// Noise-plus-interference power seen per slot,
/// `σ² = 4/(α(α−2)) π λ q γ θ^(1−2/α) Γ(2/α) + 1`.
///
/// The interference term aggregates the `q`-thinned non-neighbors; it
/// diverges for `α ≤ 2`.
pub fn interference_variance(
    intensity: f64,
    duty_cycle: f64,
    snr: f64,
    threshold: f64,
    path_loss_exponent: f64,
) -> Result<f64> {
    let a = path_loss_exponent;
    if !(a > 2.0) {
        return Err(Error::DivergentInterference(a));
    }
    if intensity == 0.0 {
        return Ok(1.0);
    }
    let interference =
        4.0 / (a * (a - 2.0)) * PI * intensity * duty_cycle * snr * threshold.powf(1.0 - 2.0 / a) * gamma(2.0 / a);
    Ok(interference + 1.0)
}

/// Density of a neighbor's link amplitude `|U|`:
/// `(4/α) θ^(2/α) u^(−4/α−1)` for `u ≥ √θ`, zero below.
pub fn neighbor_amplitude_pdf(u: f64, threshold: f64, path_loss_exponent: f64) -> f64 {
    if u < threshold.sqrt() {
        return 0.0;
    }
    let a = path_loss_exponent;
    4.0 / a * threshold.powf(2.0 / a) * u.powf(-4.0 / a - 1.0)
}

/// Distribution function matching [`neighbor_amplitude_pdf`]:
/// `1 − θ^(2/α) u^(−4/α)` for `u ≥ √θ`.
pub fn neighbor_amplitude_cdf(u: f64, threshold: f64, path_loss_exponent: f64) -> f64 {
    if u < threshold.sqrt() {
        return 0.0;
    }
    let a = path_loss_exponent;
    1.0 - threshold.powf(2.0 / a) * u.powf(-4.0 / a)
}
