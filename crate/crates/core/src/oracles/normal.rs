//! Error function and the standard normal CDF to near machine precision.

use std::f64::consts::PI;

const SERIES_LIMIT: f64 = 3.0;

/// `erf(x) = (2/√π) e^{-x²} Σ 2ⁿ x^{2n+1} / (2n+1)!!`, all terms positive.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0u32;
    while term > sum * 1e-17 {
        term *= 2.0 * x2 / f64::from(2 * n + 3);
        sum += term;
        n += 1;
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// `erfc(x)` for `x ≥ SERIES_LIMIT` from the Laplace continued fraction,
/// evaluated with the modified Lentz algorithm.
fn erfc_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = f64::from(k) / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < SERIES_LIMIT {
        erf_series(x)
    } else {
        1.0 - erfc_fraction(x)
    }
}

pub fn erfc(x: f64) -> f64 {
    if x < SERIES_LIMIT {
        1.0 - erf(x)
    } else {
        erfc_fraction(x)
    }
}

/// `Φ(x) = P(ξ ≤ x)` for a standard normal `ξ`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}
