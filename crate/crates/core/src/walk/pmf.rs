//! Exact n-step distributions on `Z^d` by dynamic programming.
//!
//! Both kernels handled here commute with coordinate permutations and sign
//! flips, and so do their initial laws. Every layer is therefore constant on
//! orbits of the hyperoctahedral group and is stored on canonical
//! representatives only: absolute values sorted in decreasing order. A point
//! of `Z^d` is looked up by canonicalising it.

use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use crate::error::{Error, Result};
use crate::lattice::{neighbors, LatticePoint, SiteHasher};

/// Default memory budget for a table (1 GiB).
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

/// Canonical DP supports up to this many coordinates (16 bits each in a `u128`).
const MAX_CANONICAL_DIM: usize = 8;

/// Rough cost of one stored state: key, value, hash slot and enumeration entry.
const BYTES_PER_STATE: u64 = 64;

type Key = u128;
type Layer = HashMap<Key, f64, BuildHasherDefault<SiteHasher>>;

/// One-step kernel of a symmetric chain on `Z^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kernel {
    /// Uniform step to one of the 2d neighbours.
    SimpleWalk,
    /// Uniformised skeleton of the two-particle difference chain under
    /// stirring, at uniformisation rate `4dN^2`. Off the neighbourhood it is a
    /// simple walk step. From `x` in the neighbourhood it stays with
    /// probability `1/4d`, moves to `-x` with probability `1/4d` and to each
    /// point of `nbhd(x) \ {0}` with probability `1/2d`.
    DifferenceSkeleton,
}

/// Initial law of a canonical DP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Start {
    Origin,
    UniformNeighbor,
}

fn encode(c: &[u16]) -> Key {
    c.iter().enumerate().fold(0u128, |k, (i, &v)| k | (v as u128) << (16 * i))
}

fn canonical_key(coords: &[i32]) -> Key {
    let mut a: Vec<u16> = coords.iter().map(|c| c.unsigned_abs() as u16).collect();
    a.sort_unstable_by(|x, y| y.cmp(x));
    encode(&a)
}

fn decode(k: Key, d: usize) -> Vec<i32> {
    (0..d).map(|i| ((k >> (16 * i)) & 0xffff) as i32).collect()
}

/// Non-increasing tuples of `d` non-negative integers with sum `m`.
fn canonical_points(d: usize, m: usize, out: &mut Vec<Vec<u16>>) {
    fn rec(d: usize, remaining: usize, cap: usize, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if cur.len() == d {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let slots = d - cur.len();
        // The largest remaining part must be at least ceil(remaining / slots).
        let lo = remaining.div_ceil(slots);
        for v in (lo..=cap.min(remaining)).rev() {
            cur.push(v as u16);
            rec(d, remaining - v, v, cur, out);
            cur.pop();
        }
    }
    rec(d, m, m, &mut Vec::with_capacity(d), out);
}

/// Number of partitions of each `m <= n` into at most `d` parts.
fn canonical_counts(d: usize, n: usize) -> Vec<u64> {
    // p[k][m]: partitions of m into parts of size <= k (conjugate to <= k parts).
    let mut p = vec![0u64; n + 1];
    p[0] = 1;
    for k in 1..=d {
        for m in k..=n {
            p[m] = p[m].saturating_add(p[m - k]);
        }
    }
    p
}

fn orbit_size(c: &[i32]) -> f64 {
    let d = c.len();
    let mut size: f64 = (1..=d).map(|k| k as f64).product();
    let mut i = 0;
    while i < d {
        let mut j = i;
        while j < d && c[j] == c[i] {
            j += 1;
        }
        size /= (1..=(j - i)).map(|k| k as f64).product::<f64>();
        i = j;
    }
    size * 2f64.powi(c.iter().filter(|&&v| v != 0).count() as i32)
}

/// L1 norms that can carry mass at step `n`. The simple walk keeps parity;
/// the skeleton may hold still and so does not.
fn support(kernel: Kernel, start: Start, n: usize) -> impl Iterator<Item = usize> {
    let top = n + usize::from(start == Start::UniformNeighbor);
    let (lo, step) = match kernel {
        Kernel::SimpleWalk => (top % 2, 2),
        Kernel::DifferenceSkeleton => (1, 1),
    };
    (lo..=top).step_by(step)
}

/// Layers `0..=n_max` of a symmetric chain, stored on canonical points.
#[derive(Debug, Clone)]
pub(crate) struct CanonicalTable {
    d: usize,
    layers: Vec<Layer>,
    /// Canonical points of each layer in enumeration order.
    order: Vec<Vec<Key>>,
}

impl CanonicalTable {
    pub(crate) fn estimate_bytes(d: usize, n_max: usize, kernel: Kernel, start: Start) -> u64 {
        let counts = canonical_counts(d, n_max + 1);
        let mut total = 0u64;
        for n in 0..=n_max {
            let states: u64 = support(kernel, start, n).map(|m| counts[m]).sum();
            total = total.saturating_add(states);
        }
        total.saturating_mul(BYTES_PER_STATE)
    }

    pub(crate) fn build(d: usize, n_max: usize, kernel: Kernel, start: Start, budget: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension(0));
        }
        if d > MAX_CANONICAL_DIM {
            return Err(Error::InvalidParameter(format!(
                "exact tables support d <= {MAX_CANONICAL_DIM}, got {d}"
            )));
        }
        if n_max >= u16::MAX as usize {
            return Err(Error::InvalidParameter(format!("n_max {n_max} too large")));
        }
        let required = Self::estimate_bytes(d, n_max, kernel, start);
        if required > budget {
            return Err(Error::Budget { required, budget });
        }
        let two_d = 2.0 * d as f64;
        let mut layers: Vec<Layer> = Vec::with_capacity(n_max + 1);
        let mut order: Vec<Vec<Key>> = Vec::with_capacity(n_max + 1);

        let mut first = Layer::default();
        let origin = vec![0u16; d];
        let mut unit = vec![0u16; d];
        unit[0] = 1;
        let init = match start {
            Start::Origin => (encode(&origin), 1.0),
            Start::UniformNeighbor => (encode(&unit), 1.0 / two_d),
        };
        first.insert(init.0, init.1);
        layers.push(first);
        order.push(vec![init.0]);

        let mut pts = Vec::new();
        let mut scratch = vec![0i32; d];
        for n in 1..=n_max {
            let prev = &layers[n - 1];
            let lookup = |c: &[i32]| prev.get(&canonical_key(c)).copied().unwrap_or(0.0);
            let mut layer = Layer::default();
            let mut keys = Vec::new();
            for m in support(kernel, start, n) {
                pts.clear();
                canonical_points(d, m, &mut pts);
                for p in &pts {
                    for (s, &v) in scratch.iter_mut().zip(p.iter()) {
                        *s = v as i32;
                    }
                    let l1 = m;
                    let mut acc = 0.0;
                    if !(kernel == Kernel::DifferenceSkeleton && l1 == 0) {
                        for axis in 0..d {
                            for delta in [1, -1] {
                                scratch[axis] += delta;
                                acc += lookup(&scratch);
                                scratch[axis] -= delta;
                            }
                        }
                        acc /= two_d;
                        if kernel == Kernel::DifferenceSkeleton && l1 == 1 {
                            // staying put plus the flip from -x, which has the same mass
                            acc += lookup(&scratch) / two_d;
                        }
                    }
                    if acc != 0.0 {
                        let k = encode(p);
                        layer.insert(k, acc);
                        keys.push(k);
                    }
                }
            }
            layers.push(layer);
            order.push(keys);
        }
        Ok(CanonicalTable { d, layers, order })
    }

    pub(crate) fn n_max(&self) -> usize {
        self.layers.len() - 1
    }

    pub(crate) fn prob(&self, n: usize, coords: &[i32]) -> f64 {
        self.layers.get(n).and_then(|l| l.get(&canonical_key(coords)).copied()).unwrap_or(0.0)
    }

    /// Mass on the 2d unit vectors at step `n`.
    pub(crate) fn neighbor_mass(&self, n: usize) -> f64 {
        let mut e1 = vec![0i32; self.d];
        e1[0] = 1;
        2.0 * self.d as f64 * self.prob(n, &e1)
    }

    pub(crate) fn layer(&self, n: usize) -> impl Iterator<Item = (Vec<i32>, f64, f64)> + '_ {
        let d = self.d;
        self.order[n].iter().map(move |&k| {
            let c = decode(k, d);
            let size = orbit_size(&c);
            (c, self.layers[n][&k], size)
        })
    }
}

/// Distribution of `V_n` for `n = 0..=n_max`, where `V` is the simple
/// symmetric random walk on `Z^d` started at the origin.
#[derive(Debug, Clone)]
pub struct WalkPmf {
    d: usize,
    table: CanonicalTable,
}

impl WalkPmf {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> usize {
        self.table.n_max()
    }

    /// `P(V_n = x)`; zero beyond `n_max`'s support.
    pub fn prob(&self, n: usize, x: &LatticePoint) -> f64 {
        if x.dim() != self.d {
            return 0.0;
        }
        self.table.prob(n, x.coords())
    }

    /// `P(V_n = 0)`.
    pub fn return_prob(&self, n: usize) -> f64 {
        self.table.prob(n, &vec![0; self.d])
    }

    /// `P(V_n in nbhd(0))`, summed point by point over the 2d neighbours.
    pub fn neighbor_prob(&self, n: usize) -> f64 {
        let origin = LatticePoint::origin(self.d);
        neighbors(&origin, self.d)
            .expect("dimension validated at construction")
            .iter()
            .map(|y| self.prob(n, y))
            .sum()
    }

    /// Canonical points of layer `n` with their per-point probability and orbit size.
    pub fn layer(&self, n: usize) -> impl Iterator<Item = (LatticePoint, f64, f64)> + '_ {
        self.table.layer(n).map(|(c, p, s)| (LatticePoint::new(c), p, s))
    }

    /// Total probability of layer `n`.
    pub fn total_mass(&self, n: usize) -> f64 {
        self.table.layer(n).map(|(_, p, s)| p * s).sum()
    }
}

/// Builds the exact table of `V_n` for `n <= n_max` within `DEFAULT_MEMORY_BUDGET`.
pub fn build_walk_pmf(d: usize, n_max: usize) -> Result<WalkPmf> {
    build_walk_pmf_with_budget(d, n_max, DEFAULT_MEMORY_BUDGET)
}

pub fn build_walk_pmf_with_budget(d: usize, n_max: usize, budget: u64) -> Result<WalkPmf> {
    let table = CanonicalTable::build(d, n_max, Kernel::SimpleWalk, Start::Origin, budget)?;
    Ok(WalkPmf { d, table })
}

/// `max_{1 <= n <= n_max} |P(V_n = 0) - P(V_{n-1} in nbhd(0)) / 2d|`.
pub fn markov_identity_residual(pmf: &WalkPmf) -> f64 {
    let two_d = 2.0 * pmf.dim() as f64;
    (1..=pmf.n_max())
        .map(|n| (pmf.return_prob(n) - pmf.neighbor_prob(n - 1) / two_d).abs())
        .fold(0.0, f64::max)
}
