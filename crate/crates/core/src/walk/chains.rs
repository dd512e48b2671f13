//! Continuous-time chains `V^N` and `W^N` and their neighbourhood occupation
//! times.
//!
//! `V^N` is the simple walk jumping at rate `4dN^2`. `W^N` is the difference
//! of two stirred particles: away from the neighbourhood it moves like `V^N`;
//! at `x` in the neighbourhood it jumps at rate `(4d-1)N^2`, to `-x` with
//! probability `1/(4d-1)` (the shared edge swaps the pair) and otherwise
//! uniformly into `nbhd(x) \ {0}`.

use rand::RngCore;

use super::series::series_terms;
use super::special::{log_factorials, poisson_cutoff, poisson_weights};
use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::rng::{below, exponential, replicates};
use crate::stats::MeanStderr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    /// Simple walk at rate `4dN^2`.
    V,
    /// Difference chain of two stirred particles.
    W,
}

/// Position, elapsed time and time spent in the neighbourhood of the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceChainState {
    coords: Vec<i32>,
    l1: i64,
    pub clock: f64,
    pub occupation_in_neighborhood: f64,
}

impl DifferenceChainState {
    pub fn origin(d: usize) -> Self {
        DifferenceChainState { coords: vec![0; d], l1: 0, clock: 0.0, occupation_in_neighborhood: 0.0 }
    }

    pub fn at(x: &LatticePoint) -> Self {
        DifferenceChainState {
            coords: x.coords().to_vec(),
            l1: x.l1(),
            clock: 0.0,
            occupation_in_neighborhood: 0.0,
        }
    }

    /// Starts at a uniformly chosen unit vector.
    pub fn uniform_neighbor<R: RngCore + ?Sized>(d: usize, rng: &mut R) -> Self {
        let mut s = Self::origin(d);
        s.shift(below(rng, 2 * d));
        s
    }

    pub fn position(&self) -> LatticePoint {
        LatticePoint::new(self.coords.clone())
    }

    #[inline]
    pub fn in_neighborhood(&self) -> bool {
        self.l1 == 1
    }

    #[inline]
    fn shift(&mut self, dir: usize) {
        let axis = dir / 2;
        let old = self.coords[axis];
        let new = if dir.is_multiple_of(2) { old + 1 } else { old - 1 };
        self.coords[axis] = new;
        self.l1 += (new.abs() - old.abs()) as i64;
    }

    /// Total jump rate in the current state; `n2 = N^2`.
    #[inline]
    fn rate(&self, kind: ChainKind, n2: f64) -> f64 {
        let four_d = 4.0 * self.coords.len() as f64;
        match kind {
            ChainKind::W if self.in_neighborhood() => (four_d - 1.0) * n2,
            _ => four_d * n2,
        }
    }

    #[inline]
    fn jump<R: RngCore + ?Sized>(&mut self, kind: ChainKind, rng: &mut R) {
        let d = self.coords.len();
        if kind == ChainKind::W && self.in_neighborhood() {
            let u = below(rng, 4 * d - 1);
            let axis = self.coords.iter().position(|&c| c != 0).expect("on a unit vector");
            if u == 0 {
                self.coords[axis] = -self.coords[axis];
                return;
            }
            // uniform over the 2d - 1 directions that do not lead back to 0
            let toward_origin = 2 * axis + usize::from(self.coords[axis] > 0);
            let k = (u - 1) / 2;
            self.shift(if k >= toward_origin { k + 1 } else { k });
        } else {
            self.shift(below(rng, 2 * d));
        }
    }

    /// Runs the chain until `clock == horizon`, integrating the occupation
    /// time exactly between jumps.
    pub fn advance<R: RngCore + ?Sized>(&mut self, kind: ChainKind, n: f64, horizon: f64, rng: &mut R) {
        let n2 = n * n;
        while self.clock < horizon {
            let dt = exponential(rng, self.rate(kind, n2));
            let end = (self.clock + dt).min(horizon);
            if self.in_neighborhood() {
                self.occupation_in_neighborhood += end - self.clock;
            }
            self.clock = end;
            if end < horizon {
                self.jump(kind, rng);
            }
        }
    }
}

fn check(d: usize, n: f64, t: f64, reps: u64) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if !(n > 0.0) || !(t > 0.0) || reps == 0 {
        return Err(Error::InvalidParameter(format!("need N > 0, t > 0, reps >= 1 (N={n}, t={t}, reps={reps})")));
    }
    Ok(())
}

fn simulate(kind: ChainKind, d: usize, n: f64, t: f64, reps: u64, seed: u64) -> Result<MeanStderr> {
    check(d, n, t, reps)?;
    let samples = replicates(seed, 0, reps, |_, rng| {
        let mut s = DifferenceChainState::origin(d);
        s.advance(kind, n, t, rng);
        s.occupation_in_neighborhood
    });
    Ok(MeanStderr::from_samples(&samples))
}

/// Monte Carlo estimate of `E int_0^t 1(V_s^N in nbhd(0)) ds`.
pub fn simulate_v_occupation(d: usize, n: f64, t: f64, reps: u64, seed: u64) -> Result<MeanStderr> {
    simulate(ChainKind::V, d, n, t, reps, seed)
}

/// Monte Carlo estimate of `E int_0^t 1(W_s^N in nbhd(0)) ds`.
pub fn simulate_w_occupation(d: usize, n: f64, t: f64, reps: u64, seed: u64) -> Result<MeanStderr> {
    simulate(ChainKind::W, d, n, t, reps, seed)
}

/// `E int_0^t 1(V_s^N in nbhd(0)) ds` by Poissonisation:
/// `(1 / 4dN^2) sum_n P(V_n in nbhd(0)) P(Pois(4dN^2 t) > n)`.
pub fn v_occupation_analytic(d: usize, n: f64, t: f64) -> Result<f64> {
    check(d, n, t, 1)?;
    let lambda = 4.0 * d as f64 * n * n;
    let m = lambda * t;
    let n_max = poisson_cutoff(m, 1e-13);
    let terms = series_terms(d, n_max)?;
    let lf = log_factorials(n_max);
    let w = poisson_weights(m, n_max, &lf);
    let mut below = 0.0;
    let mut total = 0.0;
    for (wn, a) in w.iter().zip(&terms.neighbor) {
        below += wn;
        total += a * (1.0 - below).max(0.0);
    }
    Ok(total / lambda)
}
