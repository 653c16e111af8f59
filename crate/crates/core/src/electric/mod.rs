//! Finite electrical networks.
//!
//! A [`Network`] is built from labelled vertices and edges with conductances
//! in `[0, ∞]`. Normalization drops zero conductances and self-loops, merges
//! the endpoints of every infinite-conductance edge into one node, and sums
//! parallel edges. Each node therefore stands for a class of original labels.

mod network;
mod solve;
mod walk;

pub use network::{series_chain_conductance, Network, TerminalPair};
pub use solve::{
    conductance_to_boundary, effective_conductance, effective_conductance_with, harmonic_solution,
    HarmonicSolution, SolverKind,
};
pub use walk::{escape_probability_mc, walk_step, EscapeEstimate, WalkError};
