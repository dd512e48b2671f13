//! Contact process with rapid stirring on the integer lattice.
//!
//! The crate is split along the lines of what it computes:
//!
//! * [`lattice`]: lattice points, neighbourhoods and the sparse occupancy
//!   configuration with incremental neighbour-pair bookkeeping.
//! * [`walk`]: exact and Monte Carlo quantities of the simple symmetric random
//!   walk: n-step distributions, the neighbour-occupation series and the
//!   limiting constant `theta_d`, the Green's function at the origin, the
//!   Poissonised neighbour probability `h(u)` and the two coupled difference
//!   chains.
//! * [`genealogy`]: one-split lineage trials over the decorrelation window
//!   `tau_N = ln N / N^2` together with their closed forms.
//! * [`sim`]: the event-driven kinetic Monte Carlo simulator.
//! * [`estimate`]: Wilson intervals, survival probabilities, the critical
//!   value scan and the asymptotics report.
//! * [`io`]: the CSV schemas shared with the command line front end.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimate;
pub mod genealogy;
pub mod io;
pub mod lattice;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use estimate::{
    asymptotics_report, critical_scan, survival_probability, wilson_interval, CriticalScanResult,
    LevelClass, ReportRow, ScanConfig, ScanLevel, SurvivalEstimate, Z_95,
};
pub use genealogy::{
    estimate_z1, f1_analytic, simulate_lineage_trial, z1_analytic, z1_exact, ExponentVariant,
    LineageEstimate, LineageParams, LineageTrialOutcome,
};
pub use lattice::{neighbors, Configuration, LatticePoint, Move, MoveEffect};
pub use sim::{
    mass_curve, run_trajectory, run_trajectory_from, run_trajectory_with_state, MassCurve, ModelParams, Outcome,
    StopPolicy, TimeScale, TrajectorySummary,
};
pub use stats::MeanStderr;
pub use walk::{
    build_walk_pmf, h_function, markov_identity_residual, neighbor_occupation_series,
    simulate_v_occupation, simulate_w_occupation, v_occupation_analytic, HFunction, SeriesResult, WalkPmf,
};
