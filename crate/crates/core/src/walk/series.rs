//! The neighbour-occupation series `S_d = sum_{n>=1} P(V_n in nbhd(0))`, the
//! limiting constant `theta_d = S_d / 4d^2` and the Green's function
//! `G(0,0) = sum_{n>=0} P(V_n = 0)`.
//!
//! Terms come from a binomial convolution over coordinates: the number of
//! steps a d-dimensional walk spends on its first coordinate is
//! `Binomial(n, 1/d)`, so
//!
//! ```text
//! P_k(n, x) = sum_m C(n, m) k^-m (1 - 1/k)^(n-m) P_1(m, x_1) P_{k-1}(n - m, x_rest)
//! ```
//!
//! where `P_1` is the one-dimensional walk. This needs no lattice storage and
//! reaches thousands of steps cheaply.
//!
//! Past the truncation point the nonzero terms of either series behave like
//! `n^{-d/2} (c_0 + c_1/n + c_2/n^2 + ...)`. The tail is estimated by fitting
//! that expansion to the last computed terms and summing it exactly with the
//! Hurwitz zeta function; the half-width is the change between the two- and
//! three-coefficient fits. A cruder conservative bound, `1.5 * C n^{-d/2}` with
//! `C` the largest scaled term among the last ten, is reported alongside.

use serde::Serialize;

use super::special::{log_factorials, parity_power_sum};
use crate::error::{Error, Result};

/// Default requested half-width for `theta_d`.
pub const DEFAULT_THETA_TOL: f64 = 1e-4;

const START_N: usize = 512;
const MAX_N: usize = 16_384;
const SAFETY: f64 = 1.5;

/// Return and neighbour probabilities of the simple walk for `n = 0..=n_max`.
#[derive(Debug, Clone)]
pub struct SeriesTerms {
    pub d: usize,
    /// `P(V_n in nbhd(0))`
    pub neighbor: Vec<f64>,
    /// `P(V_n = 0)`
    pub ret: Vec<f64>,
}

fn binomial_row(n: usize, q: f64, lf: &[f64]) -> Vec<f64> {
    let (lq, lr) = (q.ln(), (1.0 - q).ln());
    (0..=n).map(|m| (lf[n] - lf[m] - lf[n - m] + m as f64 * lq + (n - m) as f64 * lr).exp()).collect()
}

/// Computes the terms by binomial convolution; `O(d n_max^2)`.
pub fn series_terms(d: usize, n_max: usize) -> Result<SeriesTerms> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let lf = log_factorials(n_max + 1);
    let ln2 = std::f64::consts::LN_2;
    // one-dimensional walk at 0 and at +1
    let at0: Vec<f64> = (0..=n_max)
        .map(|m| if m % 2 == 0 { (lf[m] - 2.0 * lf[m / 2] - m as f64 * ln2).exp() } else { 0.0 })
        .collect();
    let at1: Vec<f64> = (0..=n_max)
        .map(|m| {
            if m % 2 == 1 {
                (lf[m] - lf[m.div_ceil(2)] - lf[(m - 1) / 2] - m as f64 * ln2).exp()
            } else {
                0.0
            }
        })
        .collect();

    // walk on k coordinates, at the origin
    let mut origin_k: Vec<f64> = (0..=n_max).map(|n| if n == 0 { 1.0 } else { 0.0 }).collect();
    let mut neighbor_k = vec![0.0; n_max + 1];
    for k in 1..=d {
        let q = 1.0 / k as f64;
        let mut next_origin = vec![0.0; n_max + 1];
        let mut next_neighbor = vec![0.0; n_max + 1];
        for n in 0..=n_max {
            if k == 1 {
                next_origin[n] = at0[n];
                next_neighbor[n] = at1[n];
                continue;
            }
            let row = binomial_row(n, q, &lf);
            let (mut o, mut e) = (0.0, 0.0);
            for m in 0..=n {
                let rest = origin_k[n - m];
                if rest == 0.0 {
                    continue;
                }
                o += row[m] * at0[m] * rest;
                e += row[m] * at1[m] * rest;
            }
            next_origin[n] = o;
            next_neighbor[n] = e;
        }
        origin_k = next_origin;
        neighbor_k = next_neighbor;
    }
    let two_d = 2.0 * d as f64;
    Ok(SeriesTerms { d, neighbor: neighbor_k.iter().map(|e| two_d * e).collect(), ret: origin_k })
}

/// Tail of a one-parity series past `n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub estimate: f64,
    pub halfwidth: f64,
    pub bound: f64,
}

/// Least-squares fit of `t_n n^{d/2}` on `1, (n0/n), (n0/n)^2, ...`.
fn fit_expansion(points: &[(usize, f64)], exponent: f64, order: usize, n0: f64) -> Vec<f64> {
    let mut ata = vec![vec![0.0; order]; order];
    let mut atb = vec![0.0; order];
    for &(n, t) in points {
        let x = n0 / n as f64;
        let y = t * (n as f64).powf(exponent);
        let basis: Vec<f64> = (0..order).map(|k| x.powi(k as i32)).collect();
        for i in 0..order {
            atb[i] += basis[i] * y;
            for j in 0..order {
                ata[i][j] += basis[i] * basis[j];
            }
        }
    }
    // Gaussian elimination with partial pivoting
    for col in 0..order {
        let piv = (col..order).max_by(|&a, &b| ata[a][col].abs().total_cmp(&ata[b][col].abs())).unwrap();
        ata.swap(col, piv);
        atb.swap(col, piv);
        let pivot = ata[col].clone();
        for row in col + 1..order {
            let f = ata[row][col] / pivot[col];
            for (a, p) in ata[row][col..].iter_mut().zip(&pivot[col..]) {
                *a -= f * p;
            }
            atb[row] -= f * atb[col];
        }
    }
    let mut c = vec![0.0; order];
    for i in (0..order).rev() {
        let s: f64 = (i + 1..order).map(|j| ata[i][j] * c[j]).sum();
        c[i] = (atb[i] - s) / ata[i][i];
    }
    c
}

/// Sum of the fitted expansion over `n > n_max` with the series' parity.
fn expansion_tail(coef: &[f64], exponent: f64, n0: f64, first: usize) -> f64 {
    coef.iter()
        .enumerate()
        .map(|(k, c)| c * n0.powi(k as i32) * parity_power_sum(exponent + k as f64, first))
        .sum()
}

/// Tail of `terms` (nonzero only on one parity class) beyond the last index.
pub(crate) fn tail_estimate(terms: &[f64], d: usize) -> TailEstimate {
    let n_max = terms.len() - 1;
    let exponent = d as f64 / 2.0;
    let nonzero: Vec<(usize, f64)> = terms.iter().copied().enumerate().filter(|&(n, t)| n > 0 && t > 0.0).collect();
    let parity = nonzero.last().map(|&(n, _)| n % 2).unwrap_or(n_max % 2);
    let first = if (n_max + 1) % 2 == parity { n_max + 1 } else { n_max + 2 };

    let last10 = &nonzero[nonzero.len().saturating_sub(10)..];
    let c_max = last10.iter().map(|&(n, t)| t * (n as f64).powf(exponent)).fold(0.0, f64::max);
    let bound = SAFETY * c_max * parity_power_sum(exponent, first);

    let fit_pts: Vec<(usize, f64)> = nonzero.iter().copied().filter(|&(n, _)| 2 * n > n_max).collect();
    if fit_pts.len() < 8 {
        return TailEstimate { estimate: bound / 2.0, halfwidth: bound / 2.0, bound };
    }
    let n0 = n_max as f64;
    let t2 = expansion_tail(&fit_expansion(&fit_pts, exponent, 2, n0), exponent, n0, first);
    let t3 = expansion_tail(&fit_expansion(&fit_pts, exponent, 3, n0), exponent, n0, first);
    // rounding in the O(n^2) convolution sums
    let floor = 1e-13 * n_max as f64;
    TailEstimate { estimate: t3, halfwidth: (t3 - t2).abs() + floor, bound }
}

/// `theta_d`, `G(0,0)` and their truncation diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesResult {
    pub d: usize,
    /// Truncation: terms `n <= n_used` are summed exactly.
    pub n_used: usize,
    /// `sum_{n=1}^{n_used} P(V_n in nbhd(0))`
    pub partial_sum: f64,
    /// Extrapolated remainder of the neighbour series.
    pub tail_estimate: f64,
    /// Conservative bound on the remainder of the neighbour series.
    pub tail_bound: f64,
    /// `(partial_sum + tail_estimate) / 4d^2`
    pub theta: f64,
    /// Half-width of `theta`.
    pub tolerance: f64,
    pub green_partial_sum: f64,
    pub green_tail_estimate: f64,
    pub green_tail_bound: f64,
    /// `G(0,0)`, from the return series with its own truncation and tail.
    pub green: f64,
    pub green_tolerance: f64,
    pub converged: bool,
    #[serde(skip)]
    pub terms: SeriesTerms,
}

impl SeriesResult {
    /// `|2d theta - (G(0,0) - 1)|`.
    pub fn identity_gap(&self) -> f64 {
        (2.0 * self.d as f64 * self.theta - (self.green - 1.0)).abs()
    }

    /// `(G(0,0) - 1) / 2d`, the Green's function form of `theta`.
    pub fn green_bound(&self) -> f64 {
        (self.green - 1.0) / (2.0 * self.d as f64)
    }

    /// `1 / (2d (2d - 1))`.
    pub fn konno_lower(&self) -> f64 {
        let two_d = 2.0 * self.d as f64;
        1.0 / (two_d * (two_d - 1.0))
    }

    /// Rows `(n, term, partial_sum, tail_bound)` of the neighbour series.
    pub fn neighbor_rows(&self) -> Vec<(usize, f64, f64, f64)> {
        cumulative_rows(&self.terms.neighbor, self.d, 1)
    }

    /// Rows `(n, term, partial_sum, tail_bound)` of the return series.
    pub fn green_rows(&self) -> Vec<(usize, f64, f64, f64)> {
        cumulative_rows(&self.terms.ret, self.d, 0)
    }
}

fn cumulative_rows(terms: &[f64], d: usize, from: usize) -> Vec<(usize, f64, f64, f64)> {
    let exponent = d as f64 / 2.0;
    let mut acc = 0.0;
    let mut recent: Vec<(usize, f64)> = Vec::new();
    (from..terms.len())
        .map(|n| {
            let t = terms[n];
            acc += t;
            if t > 0.0 && n > 0 {
                recent.push((n, t));
                if recent.len() > 10 {
                    recent.remove(0);
                }
            }
            let c = recent.iter().map(|&(m, v)| v * (m as f64).powf(exponent)).fold(0.0, f64::max);
            let parity = recent.last().map(|&(m, _)| m % 2).unwrap_or(1);
            let first = if (n + 1) % 2 == parity { n + 1 } else { n + 2 };
            (n, t, acc, SAFETY * c * parity_power_sum(exponent, first))
        })
        .collect()
}

/// Computes `theta_d` and `G(0,0)` to half-width `tol` (in `theta` units; the
/// Green's function is held to `2d * tol`), doubling the truncation until both
/// tails are resolved or the step cap is reached.
pub fn neighbor_occupation_series(d: usize, tol: f64) -> Result<SeriesResult> {
    if d == 0 {
        return Err(Error::InvalidDimension(0));
    }
    if d <= 2 {
        return Err(Error::DivergentSeries(d));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let four_d2 = 4.0 * (d * d) as f64;
    let two_d = 2.0 * d as f64;
    let mut n = START_N;
    loop {
        let terms = series_terms(d, n)?;
        let partial: f64 = terms.neighbor[1..].iter().sum();
        let green_partial: f64 = terms.ret.iter().sum();
        let tail = tail_estimate(&terms.neighbor, d);
        let gtail = tail_estimate(&terms.ret, d);
        let tolerance = tail.halfwidth / four_d2;
        let green_tolerance = gtail.halfwidth;
        let converged = tolerance <= tol && green_tolerance <= two_d * tol;
        if converged || n >= MAX_N {
            return Ok(SeriesResult {
                d,
                n_used: n,
                partial_sum: partial,
                tail_estimate: tail.estimate,
                tail_bound: tail.bound,
                theta: (partial + tail.estimate) / four_d2,
                tolerance,
                green_partial_sum: green_partial,
                green_tail_estimate: gtail.estimate,
                green_tail_bound: gtail.bound,
                green: green_partial + gtail.estimate,
                green_tolerance,
                converged,
                terms,
            });
        }
        n *= 2;
    }
}
