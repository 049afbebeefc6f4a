//! Adaptive Simpson quadrature.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

impl QuadratureResult {
    pub fn zero() -> Self {
        QuadratureResult {
            value: 0.0,
            abs_error_estimate: 0.0,
            evaluations: 0,
        }
    }

    /// Sum of integrals over adjacent intervals.
    pub fn join(self, other: QuadratureResult) -> Self {
        QuadratureResult {
            value: self.value + other.value,
            abs_error_estimate: self.abs_error_estimate + other.abs_error_estimate,
            evaluations: self.evaluations + other.evaluations,
        }
    }
}

const MAX_DEPTH: u32 = 48;

struct Simpson<'a, F> {
    f: &'a F,
    evaluations: usize,
    error: f64,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    fn eval(&mut self, x: f64) -> f64 {
        self.evaluations += 1;
        (self.f)(x)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(&mut self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth >= MAX_DEPTH || diff.abs() <= 15.0 * tol {
            self.error += diff.abs() / 15.0;
            return left + right + diff / 15.0;
        }
        self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is first split into 16 panels so that narrow features are
/// not missed by the initial three-point estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> QuadratureResult {
    if b <= a {
        return QuadratureResult::zero();
    }
    const PANELS: usize = 16;
    let mut s = Simpson {
        f,
        evaluations: 0,
        error: 0.0,
    };
    let h = (b - a) / PANELS as f64;
    let mut value = 0.0;
    let mut fa = s.eval(a);
    for p in 0..PANELS {
        let lo = a + h * p as f64;
        let hi = if p + 1 == PANELS { b } else { lo + h };
        let fm = s.eval(0.5 * (lo + hi));
        let fb = s.eval(hi);
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        value += s.refine(lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 0);
        fa = fb;
    }
    QuadratureResult {
        value,
        abs_error_estimate: s.error,
        evaluations: s.evaluations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_transcendental() {
        let cubic = adaptive_simpson(&|x: f64| x * x * x - x, 0.0, 2.0, 1e-12);
        assert!((cubic.value - 2.0).abs() < 1e-13);
        let sine = adaptive_simpson(&f64::sin, 0.0, std::f64::consts::PI, 1e-12);
        assert!((sine.value - 2.0).abs() < 1e-11);
        assert!(sine.abs_error_estimate < 1e-11);
        assert_eq!(adaptive_simpson(&f64::sin, 1.0, 1.0, 1e-9).value, 0.0);
    }

    #[test]
    fn kinked_integrand() {
        let r = adaptive_simpson(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert!((r.value - (0.045 + 0.245)).abs() < 1e-11);
    }
}
