//! Event-driven kinetic Monte Carlo for the contact process with stirring.
//!
//! Each particle carries three exponential clocks: death (rate 1), birth
//! (rate `lambda`) and stirring across each of its 2d edges (rate `N` each,
//! `2dN` in total). The next event time is drawn from the total rate
//! `k (1 + lambda + 2dN)` of the `k` particles, then a uniformly random
//! particle and an event type proportional to the rates. A birth onto an
//! occupied site is suppressed; a stirring move onto an occupied site swaps
//! two occupied sites and leaves the set unchanged.
//!
//! Per-edge stirring and this per-particle scheme give the same set-valued
//! process: empty-empty and occupied-occupied edges are no-ops either way, and
//! an occupied-empty edge fires at rate `N` in both.

use rand::RngCore;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Configuration;
use crate::rng::{below, exponential, replicates, rng_for, uniform};
use crate::stats::MeanStderr;

pub const DEFAULT_EVENT_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TimeScale {
    /// Death at rate 1.
    Raw,
    /// Every rate multiplied by `N`; a reported time `t` is raw time `N t`.
    SpeededUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub d: usize,
    /// Stirring rate per edge.
    pub n: f64,
    /// Birth rate `lambda`.
    pub lambda: f64,
    pub time_scale: TimeScale,
}

impl ModelParams {
    pub fn with_lambda(d: usize, n: f64, lambda: f64) -> Result<Self> {
        let p = ModelParams { d, n, lambda, time_scale: TimeScale::Raw };
        p.validate()?;
        Ok(p)
    }

    /// `lambda = 1 + theta / N`.
    pub fn with_theta(d: usize, n: f64, theta: f64) -> Result<Self> {
        Self::with_lambda(d, n, 1.0 + theta / n)
    }

    pub fn speeded_up(mut self) -> Self {
        self.time_scale = TimeScale::SpeededUp;
        self
    }

    pub fn theta(&self) -> f64 {
        (self.lambda - 1.0) * self.n
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if !(self.n >= 1.0) || !self.n.is_finite() {
            return Err(Error::InvalidParameter(format!("stirring rate N must be >= 1, got {}", self.n)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("birth rate must be >= 0, got {}", self.lambda)));
        }
        Ok(())
    }

    /// Multiplier applied to every rate.
    fn scale(&self) -> f64 {
        match self.time_scale {
            TimeScale::Raw => 1.0,
            TimeScale::SpeededUp => self.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StopPolicy {
    /// Maximum model time (in the params' time scale).
    pub horizon: f64,
    /// Particle count treated as survival.
    pub mass_cap: usize,
    /// Sorted observation times in `[0, horizon]`.
    pub checkpoints: Vec<f64>,
    pub event_budget: u64,
}

impl StopPolicy {
    pub fn new(horizon: f64, mass_cap: usize, checkpoints: Vec<f64>) -> Result<Self> {
        let p = StopPolicy { horizon, mass_cap, checkpoints, event_budget: DEFAULT_EVENT_BUDGET };
        p.validate()?;
        Ok(p)
    }

    pub fn with_event_budget(mut self, budget: u64) -> Self {
        self.event_budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.mass_cap < 1 {
            return Err(Error::InvalidParameter("mass cap must be at least 1".into()));
        }
        if self.checkpoints.windows(2).any(|w| w[0] > w[1])
            || self.checkpoints.iter().any(|&c| !(0.0..=self.horizon).contains(&c))
        {
            return Err(Error::InvalidParameter("checkpoints must be sorted and lie in [0, horizon]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "time")]
pub enum Outcome {
    Extinct(f64),
    MassCap(f64),
    AliveAtHorizon(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySummary {
    pub outcome: Outcome,
    /// `|xi_t|` at each checkpoint. After extinction these are 0; after a
    /// mass-cap stop or budget truncation they repeat the final state.
    pub mass_samples: Vec<u64>,
    /// Ordered neighbour-pair count at each checkpoint.
    pub pair_samples: Vec<u64>,
    pub event_count: u64,
    /// Stopped because the event budget ran out.
    pub truncated: bool,
}

/// Runs one trajectory from a single particle at the origin.
pub fn run_trajectory(p: &ModelParams, policy: &StopPolicy, seed: u64) -> Result<TrajectorySummary> {
    let mut rng = rng_for(seed, 0);
    run_trajectory_from(p, policy, Configuration::single_origin(p.d)?, &mut rng)
}

/// Runs one trajectory from an arbitrary finite configuration.
pub fn run_trajectory_from<R: RngCore + ?Sized>(
    p: &ModelParams,
    policy: &StopPolicy,
    cfg: Configuration,
    rng: &mut R,
) -> Result<TrajectorySummary> {
    run_trajectory_with_state(p, policy, cfg, rng).map(|(s, _)| s)
}

/// Like [`run_trajectory_from`], also returning the final configuration.
pub fn run_trajectory_with_state<R: RngCore + ?Sized>(
    p: &ModelParams,
    policy: &StopPolicy,
    mut cfg: Configuration,
    rng: &mut R,
) -> Result<(TrajectorySummary, Configuration)> {
    p.validate()?;
    policy.validate()?;
    if cfg.dim() != p.d {
        return Err(Error::DimensionMismatch { expected: p.d, got: cfg.dim() });
    }
    let two_d = 2 * p.d;
    let stir = two_d as f64 * p.n;
    let per_particle = 1.0 + p.lambda + stir;
    let scaled = per_particle * p.scale();
    let cps = &policy.checkpoints;
    let mut mass = Vec::with_capacity(cps.len());
    let mut pairs = Vec::with_capacity(cps.len());
    let mut t = 0.0;
    let mut events = 0u64;
    let mut truncated = false;

    let outcome = loop {
        let k = cfg.count();
        if k == 0 {
            break Outcome::Extinct(t);
        }
        if k >= policy.mass_cap {
            break Outcome::MassCap(t);
        }
        if events >= policy.event_budget {
            truncated = true;
            break Outcome::AliveAtHorizon(t);
        }
        let next = t + exponential(rng, k as f64 * scaled);
        // the state is constant on [t, next)
        while mass.len() < cps.len() && cps[mass.len()] < next {
            mass.push(k as u64);
            pairs.push(cfg.pair_count_ordered());
        }
        if next > policy.horizon {
            break Outcome::AliveAtHorizon(policy.horizon);
        }
        t = next;
        let i = below(rng, k);
        let u = uniform(rng) * per_particle;
        if u < 1.0 {
            cfg.kill(i);
        } else if u < 1.0 + p.lambda {
            cfg.birth_from(i, below(rng, two_d))?;
        } else {
            cfg.jump_from(i, below(rng, two_d))?;
        }
        events += 1;
    };
    let (m, q) = (cfg.count() as u64, cfg.pair_count_ordered());
    mass.resize(cps.len(), m);
    pairs.resize(cps.len(), q);
    Ok((TrajectorySummary { outcome, mass_samples: mass, pair_samples: pairs, event_count: events, truncated }, cfg))
}

/// Pooled checkpoint means over replicates; extinct runs contribute zeros.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassCurve {
    pub times: Vec<f64>,
    pub mass: Vec<MeanStderr>,
    pub pairs: Vec<MeanStderr>,
    /// Per-replicate change `|xi_{t_{i+1}}| - |xi_{t_i}|` between consecutive checkpoints.
    pub step_changes: Vec<MeanStderr>,
    pub reps: u64,
    /// Replicates that hit the mass cap or the event budget.
    pub stopped_early: u64,
    pub seed: u64,
}

pub fn mass_curve(p: &ModelParams, policy: &StopPolicy, reps: u64, seed: u64) -> Result<MassCurve> {
    if policy.checkpoints.is_empty() {
        return Err(Error::InvalidParameter("mass curve needs at least one checkpoint".into()));
    }
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    let start = Configuration::single_origin(p.d)?;
    let runs = replicates(seed, 0, reps, |_, rng| run_trajectory_from(p, policy, start.clone(), rng));
    let runs: Vec<TrajectorySummary> = runs.into_iter().collect::<Result<_>>()?;
    let column = |f: &dyn Fn(&TrajectorySummary) -> f64| -> MeanStderr {
        let xs: Vec<f64> = runs.iter().map(f).collect();
        MeanStderr::from_samples(&xs)
    };
    let c = policy.checkpoints.len();
    let mass = (0..c).map(|i| column(&|r| r.mass_samples[i] as f64)).collect();
    let pairs = (0..c).map(|i| column(&|r| r.pair_samples[i] as f64)).collect();
    let step_changes =
        (1..c).map(|i| column(&|r| r.mass_samples[i] as f64 - r.mass_samples[i - 1] as f64)).collect();
    let stopped_early =
        runs.iter().filter(|r| r.truncated || matches!(r.outcome, Outcome::MassCap(_))).count() as u64;
    Ok(MassCurve { times: policy.checkpoints.clone(), mass, pairs, step_changes, reps, stopped_early, seed })
}
