//! Gaussian-geometry expectations behind the activation-pattern analysis.
//!
//! For `w ~ N(0, I)` and unit vectors at angle `θ`, each quantity has a
//! closed form, and where the closed form came from a geometric argument it
//! is paired with a quadrature and/or Monte Carlo estimator.

mod mc;
pub mod normal;
pub mod quadrature;

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

pub use mc::{MCEstimate, CHUNK as MC_CHUNK};
pub use quadrature::{adaptive_simpson, QuadratureResult};

use crate::spectral::{symmetric_spectrum, RealMatrix, SYMMETRY_TOL};
use crate::{Error, Result};

/// Eigenvalue tolerance when deciding whether three angles are realizable.
pub const TRIPLE_PSD_TOL: f64 = 1e-10;

/// Target mass of the Gaussian radial tail dropped by the quadrature.
const TAIL_EPS: f64 = 1e-14;
const QUAD_TOL: f64 = 1e-13;

fn check_closed_angle(theta: f64) -> Result<()> {
    if (0.0..=PI).contains(&theta) {
        Ok(())
    } else {
        Err(Error::BadAngle(theta))
    }
}

fn check_open_angle(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < PI {
        Ok(())
    } else {
        Err(Error::BadAngle(theta))
    }
}

fn check_band(r: f64) -> Result<()> {
    if r > 0.0 && r < 0.5 {
        Ok(())
    } else {
        Err(Error::BadR(r))
    }
}

fn check_samples(samples: usize, min: usize) -> Result<()> {
    if samples >= min {
        Ok(())
    } else {
        Err(Error::Config(format!("need at least {min} Monte Carlo samples, got {samples}")))
    }
}

/// Half the separation of the lines through two unit vectors at angle `θ`.
pub fn theta_tilde(theta: f64) -> f64 {
    theta.min(PI - theta) / 2.0
}

/// `E[𝕀{wᵀx_i ≥ 0} 𝕀{wᵀx_j ≥ 0}] = (π − θ)/(2π)`.
pub fn pair_activation_expectation(theta: f64) -> Result<f64> {
    check_closed_angle(theta)?;
    Ok((PI - theta) / (2.0 * PI))
}

/// Cosine Gram of unit vectors `(x_i, x_ℓ, x_j)` with the given pairwise angles.
fn triple_gram(t_il: f64, t_lj: f64, t_ji: f64) -> RealMatrix {
    let (a, b, c) = (t_il.cos(), t_lj.cos(), t_ji.cos());
    RealMatrix::from_rows(&[vec![1.0, a, c], vec![a, 1.0, b], vec![c, b, 1.0]])
        .expect("3x3 finite")
}

fn check_triple(t_il: f64, t_lj: f64, t_ji: f64) -> Result<()> {
    for t in [t_il, t_lj, t_ji] {
        if !(0.0..PI).contains(&t) {
            return Err(Error::BadAngle(t));
        }
    }
    let spec = symmetric_spectrum(&triple_gram(t_il, t_lj, t_ji), SYMMETRY_TOL)?;
    if spec.min() < -TRIPLE_PSD_TOL {
        return Err(Error::InfeasibleTriple);
    }
    Ok(())
}

/// `E[𝕀_i 𝕀_ℓ 𝕀_j] = (2π − (θ_iℓ + θ_ℓj + θ_ji))/(4π)`.
pub fn triple_activation_expectation(t_il: f64, t_lj: f64, t_ji: f64) -> Result<f64> {
    check_triple(t_il, t_lj, t_ji)?;
    Ok((2.0 * PI - (t_il + t_lj + t_ji)) / (4.0 * PI))
}

/// `℘(R) = P(|ξ| ≤ R) = erf(R/√2)` for a standard normal `ξ`.
pub fn gauss_band_prob(r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    normal::erf(r / SQRT_2)
}

/// Measure of `{α ∈ [0, 2π) : |sin α| < sin β, |sin(α + θ)| < sin β}`:
/// `2(max{2β − θ, 0} + max{2β + θ − π, 0})`.
pub fn aleph_length(beta: f64, theta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < FRAC_PI_2) {
        return Err(Error::BadAngle(beta));
    }
    check_open_angle(theta)?;
    Ok(2.0 * ((2.0 * beta - theta).max(0.0) + (2.0 * beta + theta - PI).max(0.0)))
}

/// The same measure written piecewise in `β` with breakpoints `θ̃` and `π/2 − θ̃`.
pub fn aleph_length_piecewise(beta: f64, theta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < FRAC_PI_2) {
        return Err(Error::BadAngle(beta));
    }
    check_open_angle(theta)?;
    let tt = theta_tilde(theta);
    Ok(if beta <= tt {
        0.0
    } else if beta <= FRAC_PI_2 - tt {
        4.0 * beta - PI + (2.0 * theta - PI).abs()
    } else {
        8.0 * beta - 2.0 * PI
    })
}

/// `ð(θ, R) = P(|wᵀx_i| ≤ R, |wᵀx_j| ≤ R)` by quadrature in polar coordinates:
/// `1 − e^{−R²/2} + (1/2π) ∫_R^∞ |ℵ|(arcsin(R/ρ)) ρ e^{−ρ²/2} dρ`.
///
/// The integrand vanishes beyond `R cscθ̃` and changes branch at `R secθ̃`;
/// near `ρ = R` it has a square-root singularity in slope, removed by the
/// substitution `ρ = R + u²`.
pub fn joint_flip_prob_quadrature(theta: f64, r: f64) -> Result<QuadratureResult> {
    check_open_angle(theta)?;
    check_band(r)?;
    let tt = theta_tilde(theta);
    // Depends on θ only through θ̃, so ð(θ) = ð(π − θ) holds bit for bit.
    let sep = 2.0 * tt;
    let rho_max = (2.0 * (1.0 / TAIL_EPS).ln()).sqrt() + r;
    let rho_mid = (r / tt.cos()).min(rho_max);
    let rho_end = (r / tt.sin()).min(rho_max);

    let integrand = |rho: f64| -> f64 {
        if rho <= r {
            // β = π/2 in the limit.
            return (8.0 * FRAC_PI_2 - 2.0 * PI) * rho * (-rho * rho / 2.0).exp();
        }
        let beta = (r / rho).asin();
        let aleph = 2.0 * ((2.0 * beta - sep).max(0.0) + (2.0 * beta + sep - PI).max(0.0));
        aleph * rho * (-rho * rho / 2.0).exp()
    };

    let u_end = (rho_mid - r).sqrt();
    let first = adaptive_simpson(&|u: f64| 2.0 * u * integrand(r + u * u), 0.0, u_end, QUAD_TOL);
    let second = adaptive_simpson(&integrand, rho_mid, rho_end, QUAD_TOL);
    let integral = first.join(second);
    Ok(QuadratureResult {
        value: -(-r * r / 2.0).exp_m1() + integral.value / (2.0 * PI),
        abs_error_estimate: integral.abs_error_estimate / (2.0 * PI),
        evaluations: integral.evaluations,
    })
}

/// Leading term `2R²/(π sin 2θ̃)` of `ð(θ, R)`.
pub fn joint_flip_prob_asymptotic(theta: f64, r: f64) -> Result<f64> {
    check_open_angle(theta)?;
    if !(r > 0.0) {
        return Err(Error::BadR(r));
    }
    Ok(2.0 * r * r / (PI * (2.0 * theta_tilde(theta)).sin()))
}

/// `|ð_quadrature − ð_asymptotic| / R⁴`, the empirical quartic-remainder constant.
pub fn quartic_remainder(theta: f64, r: f64) -> Result<f64> {
    let quad = joint_flip_prob_quadrature(theta, r)?.value;
    let asym = joint_flip_prob_asymptotic(theta, r)?;
    Ok((quad - asym).abs() / r.powi(4))
}

pub fn mc_pair_activation(theta: f64, samples: usize, seed: u64) -> Result<MCEstimate> {
    check_closed_angle(theta)?;
    check_samples(samples, 1000)?;
    let (c, s) = (theta.cos(), theta.sin());
    Ok(mc::bernoulli::<2, _>(samples, seed, |w| {
        w[0] >= 0.0 && c * w[0] + s * w[1] >= 0.0
    }))
}

pub fn mc_triple_activation(
    t_il: f64,
    t_lj: f64,
    t_ji: f64,
    samples: usize,
    seed: u64,
) -> Result<MCEstimate> {
    check_triple(t_il, t_lj, t_ji)?;
    check_samples(samples, 1000)?;
    let (c_il, c_lj, c_ij) = (t_il.cos(), t_lj.cos(), t_ji.cos());
    let s_il = t_il.sin();
    let v2 = [c_il, s_il, 0.0];
    let b = if s_il > 1e-12 {
        (c_lj - c_il * c_ij) / s_il
    } else {
        0.0
    };
    let v3 = [c_ij, b, (1.0 - c_ij * c_ij - b * b).max(0.0).sqrt()];
    let dot = |v: &[f64; 3], w: &[f64; 3]| v[0] * w[0] + v[1] * w[1] + v[2] * w[2];
    Ok(mc::bernoulli::<3, _>(samples, seed, |w| {
        w[0] >= 0.0 && dot(&v2, w) >= 0.0 && dot(&v3, w) >= 0.0
    }))
}

/// Monte Carlo estimate of `ð(θ, R)`. Any `R > 0` is accepted.
pub fn mc_joint_flip(theta: f64, r: f64, samples: usize, seed: u64) -> Result<MCEstimate> {
    check_open_angle(theta)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::BadR(r));
    }
    check_samples(samples, 10_000)?;
    let (c, s) = (theta.cos(), theta.sin());
    Ok(mc::bernoulli::<2, _>(samples, seed, |w| {
        w[0].abs() <= r && (c * w[0] + s * w[1]).abs() <= r
    }))
}

/// Monte Carlo estimate of `℘(R)`.
pub fn mc_gauss_band(r: f64, samples: usize, seed: u64) -> Result<MCEstimate> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::BadR(r));
    }
    check_samples(samples, 1000)?;
    Ok(mc::bernoulli::<1, _>(samples, seed, |w| w[0].abs() <= r))
}

/// `℘(R)` by quadrature of the standard normal density, independent of the
/// series and continued-fraction routines.
pub fn gauss_band_prob_quadrature(r: f64) -> QuadratureResult {
    let density = |x: f64| (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
    let half = adaptive_simpson(&density, 0.0, r, 1e-15);
    QuadratureResult {
        value: 2.0 * half.value,
        abs_error_estimate: 2.0 * half.abs_error_estimate,
        evaluations: half.evaluations,
    }
}
