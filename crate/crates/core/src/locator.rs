//! Ranging and position solving.
//!
//! A node holding neighbor positions `z_i` and ranges `r_i` wants the point
//! minimizing `Σ |‖z − z_i‖² − r_i²|`. Relaxing `y_i = ‖z − z_i‖²` to
//! `y_i ≥ ‖z − z_i‖²` gives the convex program
//!
//! ```text
//! minimize Σ t_i   s.t.   y_i ≥ ‖z − z_i‖²,   t_i ≥ |y_i − r_i²|
//! ```
//!
//! For fixed `z` the best slack is `y_i = max(r_i², ‖z − z_i‖²)`, which makes
//! `t_i = max(0, ‖z − z_i‖² − r_i²)`. The program is therefore equivalent to
//! minimizing the hinge function [`hinge_objective`] over the plane, which is
//! what [`solve_location`] does.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::netmodel::Role;
use crate::{Error, Point, Result};

/// Shortest range ever reported, meters.
pub const MIN_RANGE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeConstraint {
    pub neighbor_position: Point,
    pub range: f64,
    pub source: Role,
}

impl RangeConstraint {
    pub fn new(neighbor_position: Point, range: f64) -> Self {
        RangeConstraint { neighbor_position, range, source: Role::Anchor }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    /// Three or more constraints.
    Determined,
    Underdetermined,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub position: Point,
    pub objective: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocationEstimate {
    pub position: Point,
    /// Hinge objective at `position`, m².
    pub objective_value: f64,
    pub constraint_count: usize,
    pub confidence: Confidence,
    pub iterations: usize,
    /// Iterate history, filled only when [`SolverOptions::trace`] is set.
    pub trace: Vec<TracePoint>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Step length at iteration `t` is `step_scale · mean(r_i) / √t`.
    pub step_scale: f64,
    /// Stop once the best objective improved by less than `tolerance` over
    /// this many iterations.
    pub patience: usize,
    pub tolerance: f64,
    /// Refine the relaxed solution against the unrelaxed objective.
    pub polish: bool,
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 500,
            step_scale: 0.5,
            patience: 20,
            tolerance: 1e-9,
            polish: false,
            trace: false,
        }
    }
}

/// Inverts `|U|² = |h|² r^(−α)`: `r = (u²/|h|²)^(−1/α)`, clamped to
/// `[MIN_RANGE, (|h|²/θ)^(1/α)]`, the farthest a neighbor can be.
pub fn estimate_distance(amplitude: f64, fading_power: f64, path_loss_exponent: f64, threshold: f64) -> Result<f64> {
    if !(amplitude > 0.0) {
        return Err(Error::NonPositive("amplitude"));
    }
    if !(fading_power > 0.0) {
        return Err(Error::NonPositive("fading power"));
    }
    if !(path_loss_exponent > 0.0 && threshold > 0.0) {
        return Err(Error::NonPositive("path-loss exponent and threshold"));
    }
    let r = (amplitude * amplitude / fading_power).powf(-1.0 / path_loss_exponent);
    let reach = (fading_power / threshold).powf(1.0 / path_loss_exponent);
    Ok(r.clamp(MIN_RANGE, reach.max(MIN_RANGE)))
}

/// `Σ max(0, ‖z − z_i‖² − r_i²)`.
pub fn hinge_objective(z: Point, constraints: &[RangeConstraint]) -> f64 {
    constraints
        .iter()
        .map(|c| (z.dist2(c.neighbor_position) - c.range * c.range).max(0.0))
        .sum()
}

/// `Σ |‖z − z_i‖² − r_i²|`, the unrelaxed objective.
pub fn consistency_error(z: Point, constraints: &[RangeConstraint]) -> f64 {
    constraints
        .iter()
        .map(|c| (z.dist2(c.neighbor_position) - c.range * c.range).abs())
        .sum()
}

fn hinge_subgradient(z: Point, constraints: &[RangeConstraint]) -> Point {
    constraints
        .iter()
        .filter(|c| z.dist2(c.neighbor_position) > c.range * c.range)
        .fold(Point::ORIGIN, |g, c| g + (z - c.neighbor_position) * 2.0)
}

fn consistency_subgradient(z: Point, constraints: &[RangeConstraint]) -> Point {
    constraints.iter().fold(Point::ORIGIN, |g, c| {
        let d = z.dist2(c.neighbor_position) - c.range * c.range;
        g + (z - c.neighbor_position) * (2.0 * d.signum())
    })
}

/// Minimizes [`hinge_objective`] by normalized subgradient descent from
/// `init`, then refines the best iterate with a smoothed Newton method.
pub fn solve_location(constraints: &[RangeConstraint], init: Point, opts: &SolverOptions) -> Result<LocationEstimate> {
    if constraints.is_empty() {
        return Err(Error::Empty("solve_location"));
    }
    let n = constraints.len() as f64;
    let mean_range = constraints.iter().map(|c| c.range).sum::<f64>() / n;
    let base = if mean_range > 0.0 {
        mean_range
    } else {
        constraints.iter().map(|c| init.dist(c.neighbor_position)).sum::<f64>() / n
    };
    let c = opts.step_scale * base;

    let mut trace = Vec::new();
    let (rough, rough_val, iterations) =
        descend(init, c, opts, |z| hinge_objective(z, constraints), |z| hinge_subgradient(z, constraints), &mut trace);
    let (best, best_val) = match smoothed_newton(rough, constraints, base) {
        Some(z) if hinge_objective(z, constraints) < rough_val => (z, hinge_objective(z, constraints)),
        _ => (rough, rough_val),
    };

    let position = if opts.polish {
        let mut polish_trace = Vec::new();
        let polish_opts = SolverOptions { max_iterations: 200, ..*opts };
        descend(
            best,
            0.1 * c,
            &polish_opts,
            |z| consistency_error(z, constraints),
            |z| consistency_subgradient(z, constraints),
            &mut polish_trace,
        )
        .0
    } else {
        best
    };

    Ok(LocationEstimate {
        position,
        objective_value: if opts.polish { hinge_objective(position, constraints) } else { best_val },
        constraint_count: constraints.len(),
        confidence: if constraints.len() >= 3 { Confidence::Determined } else { Confidence::Underdetermined },
        iterations,
        trace,
    })
}

fn descend(
    init: Point,
    c: f64,
    opts: &SolverOptions,
    f: impl Fn(Point) -> f64,
    grad: impl Fn(Point) -> Point,
    trace: &mut Vec<TracePoint>,
) -> (Point, f64, usize) {
    let mut z = init;
    let mut best = init;
    let mut best_val = f(init);
    let mut history = Vec::with_capacity(opts.max_iterations + 1);
    history.push(best_val);
    if opts.trace {
        trace.push(TracePoint { iteration: 0, position: z, objective: best_val });
    }
    let mut t = 0;
    while t < opts.max_iterations {
        let g = grad(z);
        let norm = g.norm();
        if norm == 0.0 || best_val == 0.0 {
            break;
        }
        t += 1;
        z = z - g * (c / (t as f64).sqrt() / norm);
        let val = f(z);
        if val < best_val {
            best_val = val;
            best = z;
        }
        history.push(best_val);
        if opts.trace {
            trace.push(TracePoint { iteration: t, position: z, objective: val });
        }
        if t >= opts.patience && history[t - opts.patience] - best_val < opts.tolerance {
            break;
        }
    }
    (best, best_val, t)
}

/// Finishes a rough minimizer by damped Newton steps on the smoothed hinge
/// `Σ τ ln(1 + exp(q_i/τ))`, shrinking `τ` toward zero. Subgradient steps
/// stall near kinks; this resolves them to machine precision.
fn smoothed_newton(start: Point, constraints: &[RangeConstraint], scale: f64) -> Option<Point> {
    let scale = scale.max(MIN_RANGE).powi(2);
    let smooth = |z: Point, tau: f64| -> f64 {
        constraints
            .iter()
            .map(|c| {
                let x = (z.dist2(c.neighbor_position) - c.range * c.range) / tau;
                tau * (x.max(0.0) + (-x.abs()).exp().ln_1p())
            })
            .sum()
    };
    let mut z = start;
    let mut tau = 1e-2 * scale;
    while tau > 1e-13 * scale {
        for _ in 0..60 {
            let (mut gx, mut gy, mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for c in constraints {
                let d = z - c.neighbor_position;
                let x = (d.x * d.x + d.y * d.y - c.range * c.range) / tau;
                let s = 1.0 / (1.0 + (-x).exp());
                let curv = s * (1.0 - s) / tau * 4.0;
                gx += 2.0 * s * d.x;
                gy += 2.0 * s * d.y;
                hxx += 2.0 * s + curv * d.x * d.x;
                hxy += curv * d.x * d.y;
                hyy += 2.0 * s + curv * d.y * d.y;
            }
            let reg = 1e-12 * (hxx + hyy) + f64::MIN_POSITIVE;
            let (hxx, hyy) = (hxx + reg, hyy + reg);
            let det = hxx * hyy - hxy * hxy;
            if !(det > 0.0) {
                break;
            }
            let step = Point::new(-(hyy * gx - hxy * gy) / det, -(hxx * gy - hxy * gx) / det);
            let decrement = -(gx * step.x + gy * step.y);
            if !(decrement > 1e-15 * scale) {
                break;
            }
            let f0 = smooth(z, tau);
            let mut t = 1.0;
            while t > 1e-12 && smooth(z + step * t, tau) > f0 - 0.25 * t * decrement {
                t *= 0.5;
            }
            if t <= 1e-12 {
                break;
            }
            z = z + step * t;
        }
        tau *= 0.1;
    }
    (z.x.is_finite() && z.y.is_finite()).then_some(z)
}

/// Constraints and iterate trace as CSV, for debugging a single solve.
pub fn diagnostic_csv(constraints: &[RangeConstraint], estimate: &LocationEstimate) -> String {
    let mut out = String::from("kind,index,x,y,value\n");
    for (i, c) in constraints.iter().enumerate() {
        let _ = writeln!(out, "constraint,{i},{},{},{}", c.neighbor_position.x, c.neighbor_position.y, c.range);
    }
    for p in &estimate.trace {
        let _ = writeln!(out, "iterate,{},{},{},{}", p.iteration, p.position.x, p.position.y, p.objective);
    }
    out
}
