//! The first particle's lineage over the decorrelation window
//! `tau_N = ln N / N^2` of the speeded-up process.
//!
//! `F1` is the event that the lineage splits exactly once in `[0, tau_N)` and
//! nobody dies; `Z1` additionally requires the two children to be lattice
//! neighbours at `tau_N`. In speeded-up time a particle dies at rate `N`,
//! splits at rate `N + theta`, and each edge is stirred at rate `N^2`.
//!
//! The trial never tracks absolute positions: before the split nothing about
//! the location matters, and after it only the children's difference does,
//! which evolves as the difference chain `W^N`.

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::rng::{exponential, replicates, uniform};
use crate::stats::MeanStderr;
use crate::walk::chains::{ChainKind, DifferenceChainState};
use crate::walk::hfunc::{HFunction, POISSON_TAIL};
use crate::walk::pmf::{CanonicalTable, Kernel, Start, DEFAULT_MEMORY_BUDGET};
use crate::walk::special::poisson_cutoff;

/// Parameters of one lineage trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineageParams {
    pub d: usize,
    pub n: f64,
    pub theta: f64,
    /// `ln N / N^2`
    pub tau: f64,
}

impl LineageParams {
    pub fn new(d: usize, n: f64, theta: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if !(n >= 2.0) || !n.is_finite() {
            return Err(Error::InvalidParameter(format!("lineage trials need N >= 2, got {n}")));
        }
        if !(n + theta > 0.0) {
            return Err(Error::InvalidParameter(format!("birth rate N + theta must be positive (theta = {theta})")));
        }
        Ok(LineageParams { d, n, theta, tau: n.ln() / (n * n) })
    }

    fn birth(&self) -> f64 {
        self.n + self.theta
    }

    /// Total branching rate of one particle, `2N + theta`.
    fn branch(&self) -> f64 {
        2.0 * self.n + self.theta
    }

    /// `4dN^2`: the stirring rate of the children's difference.
    fn motion(&self) -> f64 {
        4.0 * self.d as f64 * self.n * self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineageTrialOutcome {
    pub f1: bool,
    pub z1: bool,
    /// Time of the first split, if the first branching event was a split before `tau_N`.
    pub split_time: Option<f64>,
}

/// One exact-event trial of the lineage over `[0, tau_N)`.
pub fn simulate_lineage_trial<R: RngCore + ?Sized>(p: &LineageParams, rng: &mut R) -> LineageTrialOutcome {
    let miss = |split_time| LineageTrialOutcome { f1: false, z1: false, split_time };
    let first = exponential(rng, p.branch());
    if first >= p.tau {
        return miss(None);
    }
    if uniform(rng) * p.branch() < p.n {
        return miss(None);
    }
    let remaining = p.tau - first;
    // either child dying or splitting before tau_N breaks F1
    if exponential(rng, 2.0 * p.branch()) < remaining {
        return miss(Some(first));
    }
    let mut diff = DifferenceChainState::uniform_neighbor(p.d, rng);
    diff.advance(ChainKind::W, p.n, remaining, rng);
    LineageTrialOutcome { f1: true, z1: diff.in_neighborhood(), split_time: Some(first) }
}

/// `P(F1) = (N+theta)/(2N+theta) e^{-(2N+theta) tau} (1 - e^{-(2N+theta) tau})`.
pub fn f1_analytic(p: &LineageParams) -> f64 {
    let a = p.branch() * p.tau;
    p.birth() / p.branch() * (-a).exp() * (-(-a).exp_m1())
}

/// Exponent in the prefactor of the approximate `E[Z1]` formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ExponentVariant {
    /// `e^{-(2N+theta) tau}`, consistent with `P(F1)`.
    #[default]
    Consistent,
    /// `e^{-2(N+theta) tau}`.
    Doubled,
}

/// Approximate `E[Z1]`: `P(F1)`-type prefactor times the window average of `h`,
///
/// ```text
/// (N+theta)/(2N+theta) e^{-x tau} (1 - e^{-(2N+theta) tau}) (1/M) int_0^M h(r) dr,   M = 4dN^2 tau
/// ```
///
/// with `x = 2N+theta` or `2(N+theta)` per `variant`. This form treats the
/// split time as uniform on the window given `F1`, which is exact only as
/// `N -> infinity`; see [`z1_exact`].
pub fn z1_analytic(p: &LineageParams, variant: ExponentVariant) -> Result<f64> {
    let m = p.motion() * p.tau;
    let h = HFunction::for_range(p.d, m)?;
    z1_analytic_with(p, &h, variant)
}

pub fn z1_analytic_with(p: &LineageParams, h: &HFunction, variant: ExponentVariant) -> Result<f64> {
    let m = p.motion() * p.tau;
    let f = |r: f64| h.eval(r).unwrap_or(f64::NAN);
    // h <= 1 and h(0) = 1, so the integral exceeds 1e-2 and 1e-9 absolute is well under 1e-6 relative
    let integral = adaptive_simpson(&f, 0.0, m, 1e-9, 50)?;
    if !integral.is_finite() {
        return Err(Error::Truncation { have: h.n_max(), need: poisson_cutoff(m, POISSON_TAIL) });
    }
    let a = p.branch() * p.tau;
    let decay = match variant {
        ExponentVariant::Consistent => a,
        ExponentVariant::Doubled => 2.0 * p.birth() * p.tau,
    };
    Ok(p.birth() / p.branch() * (-decay).exp() * (-(-a).exp_m1()) * integral / m)
}

/// Exact `E[Z1]` at finite `N`:
///
/// ```text
/// (N+theta) e^{-(2N+theta) tau} int_0^tau e^{-(2N+theta) r} P(D_r in nbhd(0)) dr
/// ```
///
/// where `r` is the time since the split and `D` the difference chain started
/// uniformly on the neighbourhood. `P(D_r in nbhd)` is evaluated by
/// uniformisation at rate `4dN^2` over the exact skeleton table.
pub fn z1_exact(p: &LineageParams) -> Result<f64> {
    let lambda = p.motion();
    let m = lambda * p.tau;
    let n_max = poisson_cutoff(m, POISSON_TAIL);
    let table = CanonicalTable::build(p.d, n_max, Kernel::DifferenceSkeleton, Start::UniformNeighbor, DEFAULT_MEMORY_BUDGET)?;
    let coef: Vec<f64> = (0..=n_max).map(|n| table.neighbor_mass(n)).collect();
    let adjacency = HFunction::from_coefficients(p.d, coef);
    let rate = p.branch() / lambda;
    let f = |x: f64| (-rate * x).exp() * adjacency.eval(x).unwrap_or(f64::NAN);
    let integral = adaptive_simpson(&f, 0.0, m, 1e-10, 50)?;
    Ok(p.birth() * (-p.branch() * p.tau).exp() * integral / lambda)
}

/// Pooled Monte Carlo estimates of `P(F1)` and `E[Z1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineageEstimate {
    pub params: LineageParams,
    pub reps: u64,
    pub f1: MeanStderr,
    pub z1: MeanStderr,
    pub seed: u64,
}

pub fn estimate_z1(p: &LineageParams, reps: u64, seed: u64) -> Result<LineageEstimate> {
    if reps < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 replicates, got {reps}")));
    }
    let outcomes = replicates(seed, 0, reps, |_, rng| simulate_lineage_trial(p, rng));
    let f1 = outcomes.iter().filter(|o| o.f1).count() as u64;
    let z1 = outcomes.iter().filter(|o| o.z1).count() as u64;
    debug_assert!(outcomes.iter().all(|o| !o.z1 || o.f1));
    Ok(LineageEstimate {
        params: *p,
        reps,
        f1: MeanStderr::from_counts(f1, reps),
        z1: MeanStderr::from_counts(z1, reps),
        seed,
    })
}
