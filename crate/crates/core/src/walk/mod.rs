//! Simple symmetric random walk analytics.
//!
//! Two independent routes compute the walk's n-step probabilities:
//!
//! * [`pmf`]: a dynamic programme over lattice points, reduced by the
//!   hyperoctahedral symmetry (coordinate permutations and sign flips). It
//!   yields whole distributions and also drives the difference-chain skeleton
//!   used by the exact lineage evaluator.
//! * [`series`]: a binomial convolution over coordinates that produces the
//!   return and neighbour probabilities for thousands of steps in
//!   `O(d n^2)`, followed by asymptotic extrapolation of the tail.

pub mod chains;
pub mod hfunc;
pub mod pmf;
pub mod series;
pub(crate) mod special;

pub use chains::{
    simulate_v_occupation, simulate_w_occupation, v_occupation_analytic, ChainKind, DifferenceChainState,
};
pub use hfunc::{h_function, HFunction};
pub use pmf::{build_walk_pmf, markov_identity_residual, WalkPmf, DEFAULT_MEMORY_BUDGET};
pub use series::{neighbor_occupation_series, series_terms, SeriesResult, SeriesTerms, DEFAULT_THETA_TOL};
