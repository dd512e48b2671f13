//! The Poissonised neighbour probability
//! `h(u) = P(W + V_{pi(u)} in nbhd(0))`, with `W` uniform on the neighbourhood,
//! `V` the simple walk and `pi` a rate-one Poisson process, all independent.

use super::pmf::WalkPmf;
use super::series::series_terms;
use super::special::{log_factorials, poisson_cutoff, poisson_upper_tail, poisson_weights};
use crate::error::{Error, Result};
use crate::lattice::{neighbors, LatticePoint};

/// Poisson mass allowed beyond the truncation.
pub const POISSON_TAIL: f64 = 1e-10;

/// `h` through its coefficients `a_n = P(W + V_n in nbhd(0))`, `n <= n_max`.
#[derive(Debug, Clone)]
pub struct HFunction {
    d: usize,
    coef: Vec<f64>,
    lf: Vec<f64>,
}

impl HFunction {
    /// Coefficients by convolving the exact table with the uniform law of `W`.
    pub fn from_pmf(pmf: &WalkPmf) -> Self {
        let d = pmf.dim();
        let nb = neighbors(&LatticePoint::origin(d), d).expect("valid dimension");
        let coef = (0..=pmf.n_max())
            .map(|n| {
                let mut acc = 0.0;
                for w in &nb {
                    for y in &nb {
                        let diff: Vec<i32> = y.coords().iter().zip(w.coords()).map(|(a, b)| a - b).collect();
                        acc += pmf.prob(n, &LatticePoint::new(diff));
                    }
                }
                acc / nb.len() as f64
            })
            .collect();
        Self::from_coefficients(d, coef)
    }

    /// Coefficients from the convolution series: `W + V_n` has the law of `V_{n+1}`.
    pub fn new(d: usize, n_max: usize) -> Result<Self> {
        let terms = series_terms(d, n_max + 1)?;
        Ok(Self::from_coefficients(d, terms.neighbor[1..].to_vec()))
    }

    /// Builds `h` with enough terms to evaluate or integrate up to `u_max`.
    pub fn for_range(d: usize, u_max: f64) -> Result<Self> {
        Self::new(d, poisson_cutoff(u_max, POISSON_TAIL))
    }

    /// Any Poisson mixture `sum_n P(Pois(u) = n) coef[n]` with the same evaluation rules.
    pub(crate) fn from_coefficients(d: usize, coef: Vec<f64>) -> Self {
        let lf = log_factorials(coef.len());
        HFunction { d, coef, lf }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_max(&self) -> usize {
        self.coef.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    fn check(&self, u: f64) -> Result<()> {
        if !(u >= 0.0) || !u.is_finite() {
            return Err(Error::InvalidParameter(format!("h needs u >= 0, got {u}")));
        }
        if poisson_upper_tail(u, self.n_max()) >= POISSON_TAIL {
            return Err(Error::Truncation { have: self.n_max(), need: poisson_cutoff(u, POISSON_TAIL) });
        }
        Ok(())
    }

    /// `h(u)`.
    pub fn eval(&self, u: f64) -> Result<f64> {
        self.check(u)?;
        let w = poisson_weights(u, self.n_max(), &self.lf);
        Ok(w.iter().zip(&self.coef).map(|(w, a)| w * a).sum())
    }

    /// `int_0^m h(r) dr = sum_n a_n P(Pois(m) > n)`, in closed form.
    pub fn integral(&self, m: f64) -> Result<f64> {
        self.check(m)?;
        let w = poisson_weights(m, self.n_max(), &self.lf);
        let mut below = 0.0;
        let mut total = 0.0;
        for (wn, a) in w.iter().zip(&self.coef) {
            below += wn;
            total += a * (1.0 - below).max(0.0);
        }
        Ok(total)
    }
}

/// `h(u)` from an exact table with `n_max` steps.
pub fn h_function(u: f64, d: usize, n_max: usize) -> Result<f64> {
    let need = poisson_cutoff(u.max(0.0), POISSON_TAIL);
    if n_max < need {
        return Err(Error::Truncation { have: n_max, need });
    }
    let pmf = super::pmf::build_walk_pmf(d, n_max)?;
    HFunction::from_pmf(&pmf).eval(u)
}
