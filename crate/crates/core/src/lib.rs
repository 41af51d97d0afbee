//! Saddle-chain landscapes with analytic derivatives, gradient descent and
//! perturbed gradient descent simulators, and escape-time analysis.
//!
//! The main object is [`landscape::Octopus`]: a `C²` piecewise polynomial on
//! a union of `2^d` mirrored tubes. Plain GD started near the origin visits
//! `d` strict saddles in turn and spends a geometrically growing number of
//! steps near each one; PGD escapes each one in roughly constant time.

pub mod analysis;
pub mod error;
pub mod landscape;
pub mod optimize;
pub mod spline;

pub use error::{Error, Result};
