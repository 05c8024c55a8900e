//! Distributed ranging and localization over on-off random access.
//!
//! Nodes broadcast quantized coordinates as sparse on-off codewords. Each
//! receiver listens through its own off-slots, recovers which codeword every
//! neighbor sent (and how strongly it arrived) with a message-passing
//! sparse-recovery decoder, converts amplitudes to ranges, and solves a convex
//! multilateration problem. Repeating this across the network propagates
//! anchor knowledge to every client.
//!
//! Module map:
//!
//! - [`netmodel`]: Poisson geometry, fading marks, neighbor sets and the
//!   closed-form network statistics.
//! - [`codec`]: coordinate quantization and per-node ternary codebooks.
//! - [`channel`]: what one receiver observes during one frame.
//! - [`decoder`]: belief-propagation support recovery and amplitude fitting.
//! - [`locator`]: amplitude-to-range conversion and the relaxed position solve.
//! - [`sim`]: the iterative two-stage protocol and its metrics.
//! - [`bench`]: synthetic single-receiver decoding trials.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod channel;
pub mod codec;
pub mod decoder;
mod error;
pub mod geometry;
pub mod locator;
pub mod netmodel;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use geometry::Point;
