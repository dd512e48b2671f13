//! Small special-function helpers: log-factorials, Poisson weights and the
//! Hurwitz zeta function.

/// `ln k!` for `k = 0..=n`.
pub(crate) fn log_factorials(n: usize) -> Vec<f64> {
    let mut lf = Vec::with_capacity(n + 1);
    lf.push(0.0);
    let mut acc = 0.0f64;
    for k in 1..=n {
        acc += (k as f64).ln();
        lf.push(acc);
    }
    lf
}

/// Poisson probabilities `P(Pois(u) = n)` for `n = 0..=n_max`.
pub(crate) fn poisson_weights(u: f64, n_max: usize, lf: &[f64]) -> Vec<f64> {
    if u == 0.0 {
        let mut w = vec![0.0; n_max + 1];
        w[0] = 1.0;
        return w;
    }
    let lu = u.ln();
    (0..=n_max).map(|n| (-u + n as f64 * lu - lf[n]).exp()).collect()
}

/// `P(Pois(u) > n_max)`, summed directly from the upper terms.
pub(crate) fn poisson_upper_tail(u: f64, n_max: usize) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    let lu = u.ln();
    let mut ln_fact: f64 = (1..=n_max + 1).map(|k| (k as f64).ln()).sum();
    let mut n = n_max + 1;
    let mut total = 0.0;
    loop {
        let term = (-u + n as f64 * lu - ln_fact).exp();
        total += term;
        if (n as f64) > u && term < 1e-18 * total.max(1e-300) {
            break;
        }
        if n > n_max + 100_000 {
            break;
        }
        n += 1;
        ln_fact += (n as f64).ln();
    }
    total
}

/// Smallest `n` with `P(Pois(u) > n) < eps`.
pub(crate) fn poisson_cutoff(u: f64, eps: f64) -> usize {
    let mut n = u.ceil() as usize;
    while poisson_upper_tail(u, n) >= eps {
        n += 1 + (u.sqrt() as usize) / 8;
    }
    while n > 0 && poisson_upper_tail(u, n - 1) < eps {
        n -= 1;
    }
    n
}

/// Hurwitz zeta `sum_{j >= 0} (a + j)^{-s}` for `s > 1`, `a > 0`.
pub(crate) fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    // Sum directly until the Euler-Maclaurin remainder is negligible.
    let shift = (60.0 - a).max(0.0).ceil() as usize;
    let mut direct = 0.0;
    for j in 0..shift {
        direct += (a + j as f64).powf(-s);
    }
    let x = a + shift as f64;
    let mut em = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // B_{2k} / (2k)!
    const COEF: [f64; 5] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
    ];
    let mut rising = s; // s (s+1) ... (s + 2k - 2)
    let mut power = x.powf(-s - 1.0);
    for (k, c) in COEF.iter().enumerate() {
        em += c * rising * power;
        let j = 2 * k as i32 + 1;
        rising *= (s + j as f64) * (s + j as f64 + 1.0);
        power /= x * x;
    }
    direct + em
}

/// `sum_{j >= 0} (n0 + 2j)^{-s}`: a power sum over one parity class.
pub(crate) fn parity_power_sum(s: f64, n0: usize) -> f64 {
    2f64.powf(-s) * hurwitz_zeta(s, n0 as f64 / 2.0)
}
