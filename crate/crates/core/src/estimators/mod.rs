//! Numerical diagnostics for the recurrence criteria.

pub mod bad_edges;
pub mod decay;
pub mod delta_eff;
pub mod edges;
pub mod verdict;

pub use bad_edges::{bad_edge_fraction, BadEdgeParams};
pub use decay::{conductance_decay_experiment, ConductanceLaw, DecayFit, DecaySource};
pub use delta_eff::{connection_integral, delta_eff_estimate, DeltaEffEstimate};
pub use edges::{
    count_edges_above_zero, edges_above_zero_experiment, edges_above_zero_tail_bound, expected_edges_above_zero,
    has_long_edge, long_edge_exact, long_edge_ladder, long_edge_probability, EdgesAboveZero, LongEdgeEstimate,
    LongEdgeLadder,
};
pub use verdict::{recurrence_verdict, RecurrenceReport, Verdict, VerdictBudget};
