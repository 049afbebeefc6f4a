use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EtaMode, ExperimentConfig, RMode};
use crate::activation::{self, r_recommended};
use crate::bounds::{self, CheckContext, CheckKind, ConcentrationTrialSummary, RunChecker};
use crate::check::BoundCheck;
use crate::dataset::{self, AngleProfile, DataSpectrum};
use crate::network::{self, LossTrace, TrainConfig};
use crate::{seed, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub spectrum: DataSpectrum,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_star: f64,
}

impl DatasetSummary {
    fn new(spectrum: DataSpectrum, profile: &AngleProfile) -> Self {
        DatasetSummary {
            spectrum,
            theta_min: profile.theta_min,
            theta_max: profile.theta_max,
            theta_star: profile.theta_star,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub eta: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub trace: LossTrace,
    pub fitted_rate: Option<f64>,
    pub envelope_rate: f64,
    pub checks: Vec<BoundCheck>,
    pub concentration: Vec<ConcentrationTrialSummary>,
    pub warnings: Vec<String>,
    /// Excluded from determinism comparisons.
    pub wall_time_secs: f64,
}

impl RunRecord {
    /// Deterministic checks that failed.
    pub fn hard_failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.satisfied && !c.asymptotic)
    }

    pub fn all_deterministic_passed(&self) -> bool {
        self.hard_failures().next().is_none()
    }
}

/// Dataset → network → training → checks, deterministic in `cfg.seed`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    run_inner(cfg).map_err(|e| e.context(format!("experiment `{}`", cfg.name)))
}

fn run_inner(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let started = Instant::now();
    cfg.validate()?;
    let data = dataset::sample_sphere_dataset(
        cfg.n,
        cfg.d,
        cfg.theta_hat,
        seed::derive(cfg.seed, "data"),
        cfg.max_rejects,
    )?;
    let profile = dataset::angle_profile(&data)?;
    let spec = dataset::data_spectrum(&data)?;
    let mut warnings = Vec::new();

    let eta = match cfg.eta {
        EtaMode::Recommended => network::step_size_recommended(&spec, cfg.n)?,
        EtaMode::Fixed(v) => v,
    };
    let r = match cfg.r {
        RMode::Recommended { epsilon } => {
            let rec = r_recommended(spec.lambda_star, profile.theta_star, cfg.n, epsilon)?;
            if rec.outside_band {
                warnings.push(format!("recommended R = {} is not below 1/2", rec.r));
            }
            rec.r
        }
        RMode::Fixed(v) => v,
    };
    if spec.rank_deficient {
        warnings.push("data matrix is rank deficient (d < n or collinear samples)".into());
    }

    let ctx = CheckContext::new(&data, &spec, cfg.seed);
    let net = network::init_network(cfg.d, cfg.m, seed::derive(cfg.seed, "init"))?;
    let checker = RunChecker::new(&ctx, &cfg.checks, &net, &data, r, cfg.slack)?;
    let train = TrainConfig {
        eta,
        steps: cfg.steps,
        seed: cfg.seed,
        snapshot_every: cfg.snapshot_every,
    };
    let mut checks = Vec::new();
    let mut max_drift = 0.0f64;
    let want_drift = cfg.checks.contains(&CheckKind::Drift);
    let outcome = network::gd_train(net, &data, &train, |step| {
        if step.k % cfg.snapshot_every == 0 || step.k + 1 == cfg.steps {
            checks.extend(checker.step(step)?);
        }
        if want_drift {
            let drifts = activation::weight_drifts(&step.net.w, &step.net.w0)?;
            max_drift = drifts.into_iter().fold(max_drift, f64::max);
        }
        Ok(())
    })?;
    if want_drift {
        let last = activation::weight_drifts(&outcome.net.w, &outcome.net.w0)?;
        max_drift = last.into_iter().fold(max_drift, f64::max);
    }

    let tag = |c: BoundCheck| c.with_seed(cfg.seed);
    let mut fitted_rate = bounds::fitted_geometric_rate(&outcome.trace.losses);
    let mut envelope_rate = 1.0 - eta * spec.lambda_star * spec.sigma_min * spec.sigma_min;
    for kind in &cfg.checks {
        match kind {
            CheckKind::LinearRate if cfg.steps > 0 => {
                let rep = bounds::check_linear_rate(&outcome.trace, &spec, eta, cfg.k0.min(cfg.steps))?;
                fitted_rate = rep.fitted_rate;
                envelope_rate = rep.envelope_rate;
                checks.push(tag(rep.worst));
            }
            CheckKind::Drift => {
                let (a, b) = bounds::check_drift_bound(max_drift, cfg.n, cfg.m, outcome.trace.losses[0], &spec, r);
                checks.push(tag(a.at_step(cfg.steps)));
                checks.push(tag(b.at_step(cfg.steps)));
            }
            CheckKind::LambdaStar => {
                let bracket = dataset::lambda_star_bounds(&spec);
                checks.push(tag(bracket.lower.at_step(0)));
                checks.push(tag(bracket.upper.at_step(0)));
            }
            _ => {}
        }
    }

    let mut concentration = Vec::new();
    if cfg.concentration_trials > 0 {
        let trial_seed = seed::derive(cfg.seed, "trials");
        concentration.push(bounds::hoeffding_row_norm_trials(
            cfg.n,
            cfg.d,
            cfg.m,
            cfg.delta,
            cfg.concentration_trials,
            trial_seed,
        )?);
        if r < 0.5 {
            concentration.push(bounds::bernstein_flip_trials(
                cfg.n,
                cfg.d,
                cfg.m,
                r,
                cfg.delta,
                cfg.concentration_trials,
                trial_seed,
            )?);
        } else {
            warnings.push("Bernstein trials skipped: R is not below 1/2".into());
        }
    }

    Ok(RunRecord {
        config_hash: cfg.hash(),
        config: cfg.clone(),
        dataset: DatasetSummary::new(spec, &profile),
        eta,
        r,
        trace: outcome.trace,
        fitted_rate,
        envelope_rate,
        checks,
        concentration,
        warnings,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Runs every child of the sweep axis concurrently, in axis order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let children = cfg.expand()?;
    children.par_iter().map(run_experiment).collect()
}

/// Errors that carry a config context, unwrapped to the root cause.
pub fn root_cause(err: &Error) -> &Error {
    match err {
        Error::Context { source, .. } => root_cause(source),
        other => other,
    }
}
