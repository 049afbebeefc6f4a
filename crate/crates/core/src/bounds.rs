//! Every inequality and rate formula of the convergence analysis, evaluated
//! on concrete states as [`BoundCheck`]s, plus randomized trials for the
//! probabilistic envelopes and the closed-form size/complexity formulas.
//!
//! Deterministic checks (gradient lower bound, curvature upper bound,
//! phi_fact, Weyl chain, row-Gram decomposition, flip containment,
//! λ* bracket) are algebraic and must always hold. Everything that drops an
//! unknown constant or lower-order term is flagged `asymptotic`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::{
    self, column_pair_sum, gram_frobenius_sq, phi_fact_sides, row_gram_decomposition, ActivationSnapshot,
    FlipSets, PerturbationReport,
};
use crate::check::BoundCheck;
use crate::dataset::{self, DataSpectrum, Dataset};
use crate::network::{self, LossTrace, NetworkState, StepState};
use crate::oracles::gauss_band_prob;
use crate::spectral::frobenius_norm;
use crate::{seed, Error, Result};

/// Names of the checks a run can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    GradientLowerBound,
    CurvatureUpperBound,
    PhiFact,
    WeylChain,
    RowGram,
    Contraction,
    SigmaMax,
    LinearRate,
    Drift,
    LambdaStar,
    FlipContainment,
}

impl CheckKind {
    pub const ALL: [CheckKind; 11] = [
        CheckKind::GradientLowerBound,
        CheckKind::CurvatureUpperBound,
        CheckKind::PhiFact,
        CheckKind::WeylChain,
        CheckKind::RowGram,
        CheckKind::Contraction,
        CheckKind::SigmaMax,
        CheckKind::LinearRate,
        CheckKind::Drift,
        CheckKind::LambdaStar,
        CheckKind::FlipContainment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::GradientLowerBound => "gradient_lower_bound",
            CheckKind::CurvatureUpperBound => "curvature_upper_bound",
            CheckKind::PhiFact => "phi_fact",
            CheckKind::WeylChain => "weyl_chain",
            CheckKind::RowGram => "row_gram",
            CheckKind::Contraction => "contraction",
            CheckKind::SigmaMax => "sigma_max",
            CheckKind::LinearRate => "linear_rate",
            CheckKind::Drift => "drift",
            CheckKind::LambdaStar => "lambda_star",
            CheckKind::FlipContainment => "flip_containment",
        }
    }

    /// Checked at every evaluated training step (as opposed to once per run).
    pub fn per_step(self) -> bool {
        !matches!(self, CheckKind::LinearRate | CheckKind::Drift | CheckKind::LambdaStar)
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }
}

/// Dataset quantities shared by every check of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckContext {
    pub n: usize,
    pub lambda_min_gram: f64,
    pub lambda_max_gram: f64,
    pub lambda_star: f64,
    pub sigma_min_x: f64,
    /// `√(Σ_ij ⟨x_i, x_j⟩⁴)`.
    pub fourth_moment_root: f64,
    pub seed: u64,
}

impl CheckContext {
    pub fn new(data: &Dataset, spec: &DataSpectrum, seed: u64) -> Self {
        CheckContext {
            n: data.n,
            lambda_min_gram: spec.lambda_min_gram,
            lambda_max_gram: spec.lambda_max_gram,
            lambda_star: spec.lambda_star,
            sigma_min_x: spec.sigma_min,
            fourth_moment_root: dataset::fourth_moment_root(data),
            seed,
        }
    }

    pub fn from_data(data: &Dataset, seed: u64) -> Result<Self> {
        Ok(Self::new(data, &dataset::data_spectrum(data)?, seed))
    }
}

fn ensure_fresh(net: &NetworkState, data: &Dataset, snap: &ActivationSnapshot) -> Result<()> {
    if activation::activation_matrix(&net.w, &data.x)? != snap.psi {
        return Err(Error::StaleSnapshot);
    }
    Ok(())
}

/// `(2/m) σ_min²(Ψ) λ_min(XᵀX) L`.
pub fn gradient_lower_bound_rhs(snap: &ActivationSnapshot, ctx: &CheckContext, loss: f64) -> f64 {
    2.0 / snap.m() as f64 * snap.sigma_min * snap.sigma_min * ctx.lambda_min_gram * loss
}

/// `(2/m²) [‖Ψ‖_F² + Σ_{r≠s} √(‖ψ_r‖‖ψ_s‖⟨ψ_r,ψ_s⟩)] √(Σ⟨x_i,x_j⟩⁴) L`.
pub fn curvature_upper_bound_rhs(snap: &ActivationSnapshot, pair_sum: f64, ctx: &CheckContext, loss: f64) -> f64 {
    let m = snap.m() as f64;
    2.0 / (m * m) * (snap.frob_sq + pair_sum) * ctx.fourth_moment_root * loss
}

/// `‖∇L‖_F² ≥ (2/m) σ_min²(Ψ) λ_min(XᵀX) L`.
pub fn check_gradient_lower_bound(
    net: &NetworkState,
    data: &Dataset,
    snap: &ActivationSnapshot,
    ctx: &CheckContext,
) -> Result<BoundCheck> {
    ensure_fresh(net, data, snap)?;
    let g = network::gradient_matrix(net, data)?;
    let loss = network::network_loss(net, data)?;
    let norm = frobenius_norm(&g);
    Ok(BoundCheck::lower(
        CheckKind::GradientLowerBound.name(),
        norm * norm,
        gradient_lower_bound_rhs(snap, ctx, loss),
    )
    .at_step(snap.k)
    .with_seed(ctx.seed))
}

/// Curvature of the loss along its own gradient against the activation-matrix bound.
pub fn check_curvature_upper_bound(
    net: &NetworkState,
    data: &Dataset,
    snap: &ActivationSnapshot,
    ctx: &CheckContext,
) -> Result<BoundCheck> {
    ensure_fresh(net, data, snap)?;
    let g = network::gradient_matrix(net, data)?;
    let loss = network::network_loss(net, data)?;
    let lhs = network::directional_curvature(net, data, &g)?;
    let rhs = curvature_upper_bound_rhs(snap, column_pair_sum(&snap.psi), ctx, loss);
    Ok(BoundCheck::upper(CheckKind::CurvatureUpperBound.name(), lhs, rhs)
        .at_step(snap.k)
        .with_seed(ctx.seed))
}

pub fn check_phi_fact(snap: &ActivationSnapshot) -> Result<BoundCheck> {
    let (lhs, rhs) = phi_fact_sides(snap)?;
    Ok(BoundCheck::upper(CheckKind::PhiFact.name(), lhs, rhs).at_step(snap.k))
}

/// `σ_min(Ψ(k)) ≥ σ_min(Ψ(0)) − ‖Ψ(k) − Ψ(0)‖₂`.
pub fn check_weyl_chain(
    now: &ActivationSnapshot,
    init: &ActivationSnapshot,
    report: &PerturbationReport,
) -> Result<BoundCheck> {
    if (now.n(), now.m()) != (init.n(), init.m()) {
        return Err(Error::ShapeMismatch {
            left: (now.n(), now.m()),
            right: (init.n(), init.m()),
        });
    }
    Ok(BoundCheck::lower(
        CheckKind::WeylChain.name(),
        now.sigma_min,
        init.sigma_min - report.spectral_delta,
    )
    .at_step(now.k))
}

/// `σ_min²(Ψ) ≥ min_i ‖ψ̃_i‖² + λ_min(Υ)`.
pub fn check_row_gram(snap: &ActivationSnapshot) -> Result<BoundCheck> {
    let dec = row_gram_decomposition(snap)?;
    Ok(BoundCheck::lower(CheckKind::RowGram.name(), snap.sigma_min * snap.sigma_min, dec.bound).at_step(snap.k))
}

/// The one-step loss multiplier
/// `1 − (2η/m)σ_min²λ_min(G) + (η²/m²)[‖Ψ‖_F² + m‖Ψ‖_F B^{1/4}]√(Σ⟨x_i,x_j⟩⁴) + slack·(η²/m)σ_max²λ_max(G)`
/// with `B = ‖ΨΨᵀ‖_F² − ‖Ψ‖_F⁴/m`.
pub fn contraction_multiplier(snap: &ActivationSnapshot, ctx: &CheckContext, eta: f64, slack: f64) -> f64 {
    let m = snap.m() as f64;
    let ones = snap.psi.ones();
    let bracket = if ones == 0 {
        0.0
    } else {
        let mu = snap.m() as u128;
        let f = u128::from(ones);
        (mu * gram_frobenius_sq(&snap.psi) - f * f) as f64 / m
    };
    let s2min = snap.sigma_min * snap.sigma_min;
    let s2max = snap.sigma_max * snap.sigma_max;
    1.0 - 2.0 * eta / m * s2min * ctx.lambda_min_gram
        + eta * eta / (m * m) * (snap.frob_sq + m * snap.frob_sq.sqrt() * bracket.sqrt().sqrt()) * ctx.fourth_moment_root
        + slack * eta * eta / m * s2max * ctx.lambda_max_gram
}

/// `L(k+1) ≤ multiplier · L(k)`. Flagged asymptotic: the remainder term rests
/// on an unproven constant.
pub fn check_contraction(
    k: usize,
    loss: f64,
    next_loss: f64,
    eta: f64,
    snap: &ActivationSnapshot,
    ctx: &CheckContext,
    slack: f64,
) -> BoundCheck {
    BoundCheck::upper(
        CheckKind::Contraction.name(),
        next_loss,
        contraction_multiplier(snap, ctx, eta, slack) * loss,
    )
    .at_step(k)
    .with_seed(ctx.seed)
    .asymptotic()
}

/// [`check_contraction`] from a recorded trace and its stored snapshots.
pub fn check_contraction_from_trace(
    trace: &LossTrace,
    snapshots: &[ActivationSnapshot],
    k: usize,
    eta: f64,
    ctx: &CheckContext,
    slack: f64,
) -> Result<BoundCheck> {
    let snap = snapshots.iter().find(|s| s.k == k).ok_or(Error::MissingSnapshot(k))?;
    if k + 1 >= trace.losses.len() {
        return Err(Error::MissingSnapshot(k + 1));
    }
    Ok(check_contraction(k, trace.losses[k], trace.losses[k + 1], eta, snap, ctx, slack))
}

/// `σ_max²(Ψ) ≤ mn/2 + 2m√(λ*n) + 2λ*m`, with the order term dropped.
pub fn sigma_max_psi_check(snap: &ActivationSnapshot, lambda_star: f64, n: usize, m: usize) -> BoundCheck {
    let (nf, mf) = (n as f64, m as f64);
    let rhs = mf * nf / 2.0 + 2.0 * mf * (lambda_star * nf).sqrt() + 2.0 * lambda_star * mf;
    BoundCheck::upper(CheckKind::SigmaMax.name(), snap.sigma_max * snap.sigma_max, rhs)
        .at_step(snap.k)
        .asymptotic()
}

/// Flipped entries of neurons with drift `≤ R` must lie in the candidate set.
/// `lhs` counts the offending entries; `rhs` is 0.
pub fn check_flip_containment(
    sets: &FlipSets,
    init: &ActivationSnapshot,
    now: &ActivationSnapshot,
    drifts: &[f64],
) -> Result<BoundCheck> {
    let bad = activation::uncontained_flips(sets, &init.psi, &now.psi, drifts)?;
    Ok(BoundCheck::upper(CheckKind::FlipContainment.name(), bad.len() as f64, 0.0).at_step(now.k))
}

/// Outcome of comparing a loss trace with the geometric envelope
/// `(1 − η λ* σ_min²(X))^k L(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRateReport {
    /// The step with the smallest margin (the whole run passes iff it passes).
    pub worst: BoundCheck,
    pub violations: usize,
    pub envelope_rate: f64,
    /// `exp(slope)` of a least-squares line through `ln L(k)` over the
    /// positive prefix of the trace.
    pub fitted_rate: Option<f64>,
}

impl LinearRateReport {
    pub fn satisfied(&self) -> bool {
        self.violations == 0
    }
}

pub fn fitted_geometric_rate(losses: &[f64]) -> Option<f64> {
    let logs: Vec<f64> = losses.iter().take_while(|&&l| l > 0.0).map(|l| l.ln()).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mean_k = (n - 1.0) / 2.0;
    let mean_y = logs.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, y) in logs.iter().enumerate() {
        let dk = k as f64 - mean_k;
        sxy += dk * (y - mean_y);
        sxx += dk * dk;
    }
    Some((sxy / sxx).exp())
}

/// Checks `L(k) ≤ (1 − ηλ*σ_min²(X))^k L(0)` for every `k ≥ k0`.
pub fn check_linear_rate(trace: &LossTrace, spec: &DataSpectrum, eta: f64, k0: usize) -> Result<LinearRateReport> {
    if trace.losses.len() < 2 {
        return Err(Error::Config("linear-rate check needs at least one step".into()));
    }
    let rate = 1.0 - eta * spec.lambda_star * spec.sigma_min * spec.sigma_min;
    let l0 = trace.losses[0];
    let mut worst: Option<BoundCheck> = None;
    let mut violations = 0;
    for (k, &lk) in trace.losses.iter().enumerate().skip(k0.max(1)) {
        let check = BoundCheck::upper(CheckKind::LinearRate.name(), lk, rate.powi(k as i32) * l0)
            .at_step(k)
            .asymptotic();
        violations += usize::from(!check.satisfied);
        if worst.as_ref().is_none_or(|w| check.margin < w.margin) {
            worst = Some(check);
        }
    }
    let worst = worst.ok_or_else(|| Error::Config("k0 lies beyond the trace".into()))?;
    Ok(LinearRateReport {
        worst,
        violations,
        envelope_rate: rate,
        fitted_rate: fitted_geometric_rate(&trace.losses),
    })
}

/// `2√(2n L(0)) / (√m λ* σ_min²(X))`.
pub fn drift_bound(n: usize, m: usize, loss0: f64, lambda_star: f64, sigma_min_x: f64) -> f64 {
    2.0 * (2.0 * n as f64 * loss0).sqrt() / ((m as f64).sqrt() * lambda_star * sigma_min_x * sigma_min_x)
}

/// `max_r ‖w_r(k) − w_r(0)‖ ≤ bound` and `bound < R`, as two checks.
pub fn check_drift_bound(
    max_drift: f64,
    n: usize,
    m: usize,
    loss0: f64,
    spec: &DataSpectrum,
    r: f64,
) -> (BoundCheck, BoundCheck) {
    let bound = drift_bound(n, m, loss0, spec.lambda_star, spec.sigma_min);
    (
        BoundCheck::upper(CheckKind::Drift.name(), max_drift, bound).asymptotic(),
        BoundCheck::upper("drift_radius", bound, r).asymptotic(),
    )
}

/// Empirical violation count of a probabilistic envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationTrialSummary {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    pub delta: f64,
    pub envelope_description: String,
    pub envelope: f64,
    /// Mean of the bounded statistic divided by `m`.
    pub mean_fraction: f64,
}

impl ConcentrationTrialSummary {
    pub fn violation_rate(&self) -> f64 {
        self.violations as f64 / self.trials as f64
    }

    /// `rate ≤ δ + 3 √(δ(1−δ)/trials)`.
    pub fn within_tolerance(&self) -> bool {
        let se = (self.delta * (1.0 - self.delta) / self.trials as f64).sqrt();
        self.violation_rate() <= self.delta + 3.0 * se
    }
}

fn check_trials(trials: usize, delta: f64) -> Result<()> {
    if trials < 100 {
        return Err(Error::Config(format!("need at least 100 trials, got {trials}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Config(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Pre-activations `w_r(0)ᵀx_1` for a fresh initialization, one per neuron.
fn first_row_preactivations(x1: &[f64], d: usize, m: usize, seed: u64) -> Result<Vec<f64>> {
    let net = network::init_network(d, m, seed)?;
    Ok((0..m)
        .map(|r| (0..d).map(|k| net.w0[(k, r)] * x1[k]).sum())
        .collect())
}

fn run_trials(
    n: usize,
    d: usize,
    m: usize,
    trials: usize,
    seed: u64,
    stat: impl Fn(&[f64]) -> u64 + Sync,
) -> Result<Vec<u64>> {
    let data = dataset::sample_sphere_dataset(n, d, 0.0, seed::derive(seed, "data"), 10_000)?;
    let x1 = data.sample(0);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let z = first_row_preactivations(&x1, d, m, seed::derive_indexed(seed, "init", t as u64))?;
            Ok(stat(&z))
        })
        .collect()
}

/// `‖ψ̃_1(0)‖² ≤ m/2 + √((m/2) ln(1/δ))` over fresh initializations.
pub fn hoeffding_row_norm_trials(
    n: usize,
    d: usize,
    m: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationTrialSummary> {
    check_trials(trials, delta)?;
    let mf = m as f64;
    let envelope = mf / 2.0 + (mf / 2.0 * (1.0 / delta).ln()).sqrt();
    let counts = run_trials(n, d, m, trials, seed, |z| z.iter().filter(|&&v| v >= 0.0).count() as u64)?;
    Ok(ConcentrationTrialSummary {
        name: "hoeffding".into(),
        trials,
        violations: counts.iter().filter(|&&c| c as f64 > envelope).count(),
        delta,
        envelope_description: "m/2 + sqrt((m/2) ln(1/delta))".into(),
        envelope,
        mean_fraction: counts.iter().sum::<u64>() as f64 / (trials as f64 * mf),
    })
}

/// `|S̄_1| ≤ ℘(R)m + (2/3)ln(1/δ) + √(2℘(R)(1−℘(R))m ln(1/δ))` over fresh
/// initializations.
pub fn bernstein_flip_trials(
    n: usize,
    d: usize,
    m: usize,
    r: f64,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationTrialSummary> {
    if !(r > 0.0 && r < 0.5) {
        return Err(Error::BadR(r));
    }
    check_trials(trials, delta)?;
    let mf = m as f64;
    let p = gauss_band_prob(r);
    let log = (1.0 / delta).ln();
    let envelope = p * mf + 2.0 / 3.0 * log + (2.0 * p * (1.0 - p) * mf * log).sqrt();
    let counts = run_trials(n, d, m, trials, seed, |z| z.iter().filter(|v| v.abs() <= r).count() as u64)?;
    Ok(ConcentrationTrialSummary {
        name: "bernstein".into(),
        trials,
        violations: counts.iter().filter(|&&c| c as f64 > envelope).count(),
        delta,
        envelope_description: "wp(R) m + (2/3) ln(1/delta) + sqrt(2 wp(R)(1-wp(R)) m ln(1/delta))".into(),
        envelope,
        mean_fraction: counts.iter().sum::<u64>() as f64 / (trials as f64 * mf),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub m: usize,
    /// Mean of `σ_min²(Ψ₀) / (λ* m)` over trials.
    pub mean_ratio: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub points: Vec<TrendPoint>,
    /// Consecutive means over the upper half of the sweep never drop by more
    /// than two combined standard errors.
    pub top_half_non_decreasing: bool,
}

/// Sweeps `m` and averages `σ_min²(Ψ₀)/(λ* m)` over fresh datasets and
/// initializations. Trial `t` uses the same dataset for every `m`, and `λ*`
/// is computed per dataset.
pub fn sigma_min_psi0_trend(
    n: usize,
    d: usize,
    theta_hat: f64,
    m_list: &[usize],
    trials: usize,
    seed: u64,
) -> Result<TrendReport> {
    if trials < 2 {
        return Err(Error::Config("trend needs at least two trials".into()));
    }
    if m_list.windows(2).any(|w| w[0] >= w[1]) || m_list.iter().any(|&m| m < n) {
        return Err(Error::Config("m_list must be increasing with every m >= n".into()));
    }
    let datasets: Vec<(Dataset, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let data = dataset::sample_sphere_dataset(
                n,
                d,
                theta_hat,
                seed::derive_indexed(seed, "data", t as u64),
                100_000,
            )?;
            let ls = dataset::lambda_star(&dataset::mho_matrix(&dataset::angle_profile(&data)?));
            Ok((data, ls))
        })
        .collect::<Result<_>>()?;
    let mut points = Vec::with_capacity(m_list.len());
    for &m in m_list {
        let ratios: Vec<f64> = datasets
            .par_iter()
            .enumerate()
            .map(|(t, (data, ls))| {
                let net = network::init_network(d, m, seed::derive_indexed(seed, "init", t as u64))?;
                let snap = activation::snapshot(&net.w0, &data.x, 0)?;
                Ok(snap.sigma_min * snap.sigma_min / (ls * m as f64))
            })
            .collect::<Result<_>>()?;
        let k = ratios.len() as f64;
        let mean = ratios.iter().sum::<f64>() / k;
        let var = ratios.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (k - 1.0);
        points.push(TrendPoint {
            m,
            mean_ratio: mean,
            stderr: (var / k).sqrt(),
        });
    }
    let top = &points[points.len() / 2..];
    let top_half_non_decreasing = top.windows(2).all(|w| {
        let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        w[1].mean_ratio >= w[0].mean_ratio - 2.0 * se
    });
    Ok(TrendReport {
        points,
        top_half_non_decreasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverparamQuery {
    pub n: usize,
    pub delta: f64,
    pub lambda_star: f64,
    pub theta_star: f64,
    pub sigma_min_x: f64,
    pub hbar: f64,
    /// Carried for completeness; neither formula depends on it.
    pub varpi: f64,
}

/// `(m_full, m_concise)` with implied constants set to 1:
/// `n³ ln³(n/δ) / (λ*³ sin θ* σ_min⁴(X))` and `n³ ln^{10ħ+3}(n/δ) / sin θ*`.
pub fn overparam_size(q: &OverparamQuery) -> Result<(f64, f64)> {
    if !(q.theta_star > 0.0 && q.theta_star <= FRAC_PI_2) {
        return Err(Error::BadAngle(q.theta_star));
    }
    if !(q.delta > 0.0 && q.delta < 1.0) || !(q.hbar > 0.0) {
        return Err(Error::Config("need delta in (0,1) and hbar > 0".into()));
    }
    let n = q.n as f64;
    let log = (n / q.delta).ln();
    let sin = q.theta_star.sin();
    let full = n.powi(3) * log.powi(3) / (q.lambda_star.powi(3) * sin * q.sigma_min_x.powi(4));
    let concise = n.powi(3) * log.powf(10.0 * q.hbar + 3.0) / sin;
    Ok((full, concise))
}

/// `n^{3/2} ‖X‖₂² ln(1/ε) / (λ*² σ_min⁴(X))` with implied constant 1.
pub fn iteration_complexity(epsilon: f64, spec: &DataSpectrum, n: usize) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if spec.rank_deficient {
        return Err(Error::RankDeficient);
    }
    Ok((n as f64).powf(1.5) * spec.lambda_max_gram * (1.0 / epsilon).ln()
        / (spec.lambda_star.powi(2) * spec.lambda_min_gram.powi(2)))
}

/// Shared quantities for evaluating checks along a training run.
pub struct RunChecker<'a> {
    pub ctx: &'a CheckContext,
    pub kinds: Vec<CheckKind>,
    pub init: ActivationSnapshot,
    pub flip_sets: Option<FlipSets>,
    pub slack: f64,
}

impl<'a> RunChecker<'a> {
    pub fn new(
        ctx: &'a CheckContext,
        kinds: &[CheckKind],
        net: &NetworkState,
        data: &Dataset,
        r: f64,
        slack: f64,
    ) -> Result<Self> {
        let flip_sets = if kinds.contains(&CheckKind::FlipContainment) {
            Some(activation::flip_candidate_sets(&net.w0, &data.x, r)?)
        } else {
            None
        };
        Ok(RunChecker {
            ctx,
            kinds: kinds.iter().copied().filter(|k| k.per_step()).collect(),
            init: activation::snapshot(&net.w0, &data.x, 0)?,
            flip_sets,
            slack,
        })
    }

    fn wants(&self, kind: CheckKind) -> bool {
        self.kinds.contains(&kind)
    }

    /// Evaluates every requested per-step check at `step`.
    pub fn step(&self, step: &StepState<'_>) -> Result<Vec<BoundCheck>> {
        let snap = step.snapshot();
        let ctx = self.ctx;
        let mut out = Vec::new();
        let pair_sum = (self.wants(CheckKind::CurvatureUpperBound) || self.wants(CheckKind::PhiFact))
            .then(|| column_pair_sum(&snap.psi));
        let tag = |c: BoundCheck| c.at_step(step.k).with_seed(ctx.seed);
        for &kind in &self.kinds {
            let check = match kind {
                CheckKind::GradientLowerBound => {
                    let g = frobenius_norm(step.grad);
                    BoundCheck::lower(kind.name(), g * g, gradient_lower_bound_rhs(&snap, ctx, step.loss))
                }
                CheckKind::CurvatureUpperBound => {
                    let lhs = network::directional_curvature(step.net, step.data, step.grad)?;
                    let rhs = curvature_upper_bound_rhs(&snap, pair_sum.unwrap_or_default(), ctx, step.loss);
                    BoundCheck::upper(kind.name(), lhs, rhs)
                }
                CheckKind::PhiFact => {
                    if snap.psi.ones() == 0 {
                        continue;
                    }
                    let (_, rhs) = phi_fact_sides_rhs_only(&snap);
                    BoundCheck::upper(kind.name(), pair_sum.unwrap_or_default(), rhs)
                }
                CheckKind::WeylChain => {
                    let report = activation::perturbation(&snap, &self.init, &step.net.w, &step.net.w0)?;
                    check_weyl_chain(&snap, &self.init, &report)?
                }
                CheckKind::RowGram => {
                    if snap.n() > snap.m() {
                        continue;
                    }
                    check_row_gram(&snap)?
                }
                CheckKind::Contraction => {
                    check_contraction(step.k, step.loss, step.next_loss, step.eta, &snap, ctx, self.slack)
                }
                CheckKind::SigmaMax => sigma_max_psi_check(&snap, ctx.lambda_star, ctx.n, snap.m()),
                CheckKind::FlipContainment => {
                    let sets = self.flip_sets.as_ref().expect("built when requested");
                    let drifts = activation::weight_drifts(&step.net.w, &step.net.w0)?;
                    check_flip_containment(sets, &self.init, &snap, &drifts)?
                }
                CheckKind::LinearRate | CheckKind::Drift | CheckKind::LambdaStar => continue,
            };
            out.push(tag(check));
        }
        Ok(out)
    }
}

/// Right-hand side of the phi_fact inequality without the `O(m²)` pair sum.
fn phi_fact_sides_rhs_only(snap: &ActivationSnapshot) -> (f64, f64) {
    let ones = snap.psi.ones();
    let m = snap.m() as u128;
    let f2 = u128::from(ones) * u128::from(ones);
    let bracket = (m * gram_frobenius_sq(&snap.psi) - f2) as f64 / m as f64;
    (0.0, m as f64 * (ones as f64).sqrt() * bracket.sqrt().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::BinaryMatrix;
    use crate::network::{init_network, TrainConfig};
    use crate::spectral::RealMatrix;

    fn orthonormal_spec() -> DataSpectrum {
        DataSpectrum {
            lambda_min_gram: 1.0,
            lambda_max_gram: 1.0,
            spectral_norm: 1.0,
            sigma_min: 1.0,
            kappa: Some(1.0),
            lambda_star: 0.25,
            rank_deficient: false,
        }
    }

    fn small_run() -> (Dataset, NetworkState, CheckContext) {
        let data = dataset::sample_sphere_dataset(5, 8, 0.1, 3, 1000).unwrap();
        let net = init_network(8, 64, 4).unwrap();
        let ctx = CheckContext::from_data(&data, 1).unwrap();
        (data, net, ctx)
    }

    #[test]
    fn names_round_trip() {
        for k in CheckKind::ALL {
            assert_eq!(k.name().parse::<CheckKind>().unwrap(), k);
        }
        assert!("nope".parse::<CheckKind>().is_err());
    }

    #[test]
    fn gradient_and_curvature_hold_on_a_state() {
        let (data, net, ctx) = small_run();
        let snap = activation::snapshot(&net.w, &data.x, 0).unwrap();
        assert!(check_gradient_lower_bound(&net, &data, &snap, &ctx).unwrap().satisfied);
        assert!(check_curvature_upper_bound(&net, &data, &snap, &ctx).unwrap().satisfied);
        let other = init_network(8, 64, 5).unwrap();
        let stale = activation::snapshot(&other.w, &data.x, 0).unwrap();
        assert!(matches!(
            check_gradient_lower_bound(&net, &data, &stale, &ctx),
            Err(Error::StaleSnapshot)
        ));
    }

    #[test]
    fn zero_residual_is_tight() {
        let (data, net, ctx) = small_run();
        let f = network::forward(&net, &data).unwrap();
        let fitted = Dataset::new(data.x.clone(), f.iter().map(|v| v.clamp(-1.0, 1.0)).collect(), 0, 0.0).unwrap();
        if f.iter().all(|v| v.abs() <= 1.0) {
            let snap = activation::snapshot(&net.w, &fitted.x, 0).unwrap();
            let c = check_gradient_lower_bound(&net, &fitted, &snap, &ctx).unwrap();
            assert_eq!((c.lhs, c.rhs, c.margin), (0.0, 0.0, 0.0));
            let c = check_curvature_upper_bound(&net, &fitted, &snap, &ctx).unwrap();
            assert_eq!(c.lhs, 0.0);
            assert!(c.satisfied);
        }
    }

    #[test]
    fn weyl_chain_examples() {
        let psi = BinaryMatrix::from_fn(3, 5, |i, j| (i + j) % 2 == 0);
        let init = ActivationSnapshot::from_psi(psi.clone(), 0);
        let w = RealMatrix::zeros(2, 5);
        let rep = activation::perturbation(&init, &init, &w, &w).unwrap();
        let c = check_weyl_chain(&init, &init, &rep).unwrap();
        assert_eq!(c.margin, 0.0);
        let mut flipped = psi;
        flipped.set(2, 4, !flipped.get(2, 4));
        let now = ActivationSnapshot::from_psi(flipped, 1);
        let rep = activation::perturbation(&now, &init, &w, &w).unwrap();
        let c = check_weyl_chain(&now, &init, &rep).unwrap();
        assert!(c.satisfied && init.sigma_min - now.sigma_min <= 1.0 + 1e-12);
    }

    #[test]
    fn contraction_examples() {
        let (data, net, ctx) = small_run();
        let snap = activation::snapshot(&net.w, &data.x, 0).unwrap();
        let c = check_contraction(0, 2.0, 2.0, 0.0, &snap, &ctx, 1.0);
        assert_eq!(c.margin, 0.0);
        assert!(c.asymptotic);
        let c = check_contraction(0, 0.0, 0.0, 0.1, &snap, &ctx, 1.0);
        assert_eq!((c.lhs, c.rhs), (0.0, 0.0));

        let cfg = TrainConfig {
            eta: 0.05,
            steps: 3,
            seed: 0,
            snapshot_every: 2,
        };
        let out = network::gd_train(net, &data, &cfg, |_| Ok(())).unwrap();
        assert!(check_contraction_from_trace(&out.trace, &out.snapshots, 0, 0.05, &ctx, 1.0).is_ok());
        assert!(matches!(
            check_contraction_from_trace(&out.trace, &out.snapshots, 1, 0.05, &ctx, 1.0),
            Err(Error::MissingSnapshot(1))
        ));
    }

    #[test]
    fn linear_rate_examples() {
        let spec = orthonormal_spec();
        let eta = 0.1;
        let build = |q: f64| LossTrace {
            losses: (0..50).map(|k| q.powi(k)).collect(),
            grad_norms: vec![0.0; 49],
            contraction_ratios: vec![q; 49],
        };
        let faster = 1.0 - 2.0 * eta * 0.25;
        let rep = check_linear_rate(&build(faster), &spec, eta, 1).unwrap();
        assert!(rep.satisfied());
        assert!((rep.fitted_rate.unwrap() - faster).abs() < 1e-12);
        // Half the envelope's decrement decays more slowly and leaves it.
        let slower = 1.0 - eta * 0.25 / 2.0;
        assert_eq!(check_linear_rate(&build(slower), &spec, eta, 1).unwrap().violations, 49);

        let flat = LossTrace {
            losses: vec![3.0; 5],
            grad_norms: vec![0.0; 4],
            contraction_ratios: vec![1.0; 4],
        };
        let rep = check_linear_rate(&flat, &spec, 0.0, 1).unwrap();
        assert_eq!(rep.worst.margin, 0.0);
        assert!(rep.satisfied());
        assert!(check_linear_rate(&flat, &spec, 0.1, 1).unwrap().violations > 0);
    }

    #[test]
    fn drift_examples() {
        let spec = orthonormal_spec();
        let (a, b) = check_drift_bound(0.0, 4, 100, 1.0, &spec, 10.0);
        assert!(a.satisfied && b.satisfied);
        let small = drift_bound(4, 400, 1.0, 0.25, 1.0);
        let large = drift_bound(4, 1600, 1.0, 0.25, 1.0);
        assert!((small / large - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_max_examples() {
        let zero = ActivationSnapshot::from_psi(BinaryMatrix::zeros(4, 8), 0);
        assert!(sigma_max_psi_check(&zero, 0.25, 4, 8).satisfied);
        let full = ActivationSnapshot::from_psi(BinaryMatrix::from_fn(16, 64, |_, _| true), 0);
        let c = sigma_max_psi_check(&full, 0.05, 16, 64);
        assert!((c.lhs - 1024.0).abs() < 1e-9);
        assert!(!c.satisfied && c.asymptotic);
    }

    #[test]
    fn hoeffding_examples() {
        let s = hoeffding_row_norm_trials(3, 4, 200, 0.5, 200, 7).unwrap();
        assert!(s.violation_rate() <= 0.5);
        assert!((s.mean_fraction - 0.5).abs() < 0.02);
        // m = 1 with δ = 0.5: envelope 1/2 + √(ln 2 / 2) > 1, so nothing violates.
        let s = hoeffding_row_norm_trials(3, 4, 1, 0.5, 100, 7).unwrap();
        assert!(s.envelope > 1.0 && s.violations == 0);
        assert!(hoeffding_row_norm_trials(3, 4, 10, 0.5, 10, 7).is_err());
    }

    #[test]
    fn bernstein_examples() {
        let s = bernstein_flip_trials(3, 4, 2000, 0.1, 0.1, 200, 9).unwrap();
        assert!(s.within_tolerance());
        assert!((s.mean_fraction - gauss_band_prob(0.1)).abs() < 0.01);
        let s = bernstein_flip_trials(3, 4, 500, 1e-9, 0.1, 100, 9).unwrap();
        assert_eq!(s.violations, 0);
        assert!(bernstein_flip_trials(3, 4, 10, 0.6, 0.1, 100, 9).is_err());
    }

    #[test]
    fn trend_single_sample() {
        let rep = sigma_min_psi0_trend(1, 3, 0.0, &[64, 256], 20, 3).unwrap_err();
        assert!(matches!(rep, Error::Config(_)));
    }

    #[test]
    fn overparam_examples() {
        let q = OverparamQuery {
            n: 4,
            delta: 0.1,
            lambda_star: 0.25,
            theta_star: FRAC_PI_2,
            sigma_min_x: 1.0,
            hbar: 0.1,
            varpi: 0.0,
        };
        let (full, concise) = overparam_size(&q).unwrap();
        let l = 40f64.ln();
        assert!((full - 64.0 * 64.0 * l.powi(3)).abs() < 1e-9 * full);
        assert!((concise - 64.0 * l.powi(4)).abs() < 1e-9 * concise);
        let tiny = OverparamQuery { theta_star: 1e-12, ..q };
        let (f2, c2) = overparam_size(&tiny).unwrap();
        assert!(f2 > 1e15 && c2 > 1e12);
        assert!(overparam_size(&OverparamQuery { theta_star: 2.0, ..q }).is_err());
    }

    #[test]
    fn iteration_complexity_examples() {
        let spec = orthonormal_spec();
        assert_eq!(iteration_complexity(1.0, &spec, 16).unwrap(), 0.0);
        let t = iteration_complexity(1e-3, &spec, 16).unwrap();
        assert!((t - 64.0 * 1000f64.ln() * 16.0).abs() < 1e-9);
        assert!((t - 7073.6).abs() < 0.1);
        let bad = DataSpectrum { rank_deficient: true, ..spec };
        assert!(matches!(iteration_complexity(0.1, &bad, 4), Err(Error::RankDeficient)));
    }

    #[test]
    fn run_checker_matches_standalone_checks() {
        let (data, net, ctx) = small_run();
        let checker = RunChecker::new(&ctx, &CheckKind::ALL, &net, &data, 0.2, 1.0).unwrap();
        let cfg = TrainConfig {
            eta: 0.05,
            steps: 4,
            seed: 0,
            snapshot_every: 1,
        };
        let mut all = Vec::new();
        network::gd_train(net, &data, &cfg, |s| {
            let checks = checker.step(s)?;
            let snap = s.snapshot();
            let g = check_gradient_lower_bound(s.net, s.data, &snap, &ctx)?;
            let c = check_curvature_upper_bound(s.net, s.data, &snap, &ctx)?;
            let p = check_phi_fact(&snap)?;
            for want in [g, c, p] {
                let got = checks.iter().find(|x| x.name == want.name).unwrap();
                assert!((got.lhs - want.lhs).abs() <= 1e-12 * want.lhs.abs().max(1.0));
                assert!((got.rhs - want.rhs).abs() <= 1e-12 * want.rhs.abs().max(1.0));
            }
            all.extend(checks);
            Ok(())
        })
        .unwrap();
        assert_eq!(all.len(), 4 * 8);
        assert!(all.iter().filter(|c| !c.asymptotic).all(|c| c.satisfied));
    }
}
