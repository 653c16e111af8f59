//! Long-range percolation on the integer line.
//!
//! The crate samples homogeneous and weight-dependent random connection
//! models on finite windows of `Z`, turns the samples into electrical
//! networks, computes effective conductances, projects spatial networks onto
//! the nearest-neighbour line, and runs the Monte Carlo diagnostics that
//! indicate recurrence of the simple random walk on the infinite cluster:
//!
//! * [`model`]: kernels, connection functions, and the seeded graph sampler.
//! * [`electric`]: networks with conductances in `(0, ∞]`, contraction,
//!   Kirchhoff solves, and the conductance-biased random walk.
//! * [`projection`]: collapse of a network on real positions onto `Z_nn`.
//! * [`estimators`]: effective decay exponent, conductance decay, edges above
//!   `0+`, dyadic long-edge probabilities, bad-edge fractions and the
//!   aggregated recurrence report.
//!
//! Everything here works on finite truncations. Estimates are truncated
//! versions of the infinite-volume quantities and never amount to a proof.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod edgelist;
pub mod electric;
pub mod error;
pub mod estimators;
pub mod mc;
pub mod model;
pub mod projection;

pub use error::{Error, Result};
