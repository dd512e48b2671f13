//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err: &mut f64,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        if depth == 0 && delta.abs() > 15.0 * tol {
            *err += delta.abs() / 15.0;
        }
        return left + right + delta / 15.0;
    }
    recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1, err)
        + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1, err)
}

/// Integrates `f` over `[a, b]` to absolute error `tol`; fails if the depth
/// limit is hit before the local error estimates fall below tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    let mut err = 0.0;
    let value = recurse(f, a, fa, b, fb, m, fm, whole, tol, max_depth, &mut err);
    if err > tol {
        return Err(Error::Quadrature { estimate: value, error: err });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_functions() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12, 30).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-11);
        let v = adaptive_simpson(&|x: f64| (-x).exp() * x.sin(), 0.0, 20.0, 1e-12, 40).unwrap();
        let exact = 0.5 * (1.0 - (-20f64).exp() * (20f64.sin() + 20f64.cos()));
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn reports_non_convergence() {
        let r = adaptive_simpson(&|x: f64| (1.0 / x).sin(), 1e-9, 1.0, 1e-14, 3);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
