use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bounds::CheckKind;
use crate::textio;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMode {
    /// `λ* / (2κ² n^{3/2})`.
    Recommended,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RMode {
    /// `√(π λ* sin θ* / ((2 + ε) n))`.
    Recommended { epsilon: f64 },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    N,
    D,
    M,
    Eta,
    R,
    Steps,
    Seed,
    ThetaHat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// One experiment. Every field has a default, so a config file only lists
/// what it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub theta_hat: f64,
    pub eta: EtaMode,
    pub r: RMode,
    pub steps: usize,
    pub snapshot_every: usize,
    pub seed: u64,
    pub delta: f64,
    pub checks: Vec<CheckKind>,
    pub sweep: Option<SweepAxis>,
    /// Coefficient of the remainder term in the contraction check.
    pub slack: f64,
    /// First step at which the linear-rate envelope is enforced.
    pub k0: usize,
    /// Trials per concentration envelope; 0 skips them.
    pub concentration_trials: usize,
    pub max_rejects: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "run".into(),
            n: 16,
            d: 32,
            m: 1024,
            theta_hat: 0.0,
            eta: EtaMode::Recommended,
            r: RMode::Recommended { epsilon: 2.0 },
            steps: 200,
            snapshot_every: 10,
            seed: 0,
            delta: 0.05,
            checks: CheckKind::ALL.to_vec(),
            sweep: None,
            slack: 1.0,
            k0: 1,
            concentration_trials: 0,
            max_rejects: 100_000,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&textio::read_file(path)?).map_err(|e| e.context(format!("loading {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n < 2 || self.d == 0 || self.m == 0 {
            return fail(format!("need n >= 2, d >= 1, m >= 1 (got {}, {}, {})", self.n, self.d, self.m));
        }
        if !(0.0..PI / 3.0).contains(&self.theta_hat) {
            return fail(format!("theta_hat must lie in [0, pi/3), got {}", self.theta_hat));
        }
        if let EtaMode::Fixed(eta) = self.eta {
            if !(eta >= 0.0 && eta.is_finite()) {
                return fail(format!("eta must be finite and >= 0, got {eta}"));
            }
        }
        match self.r {
            RMode::Recommended { epsilon } if !(epsilon > 0.0) => {
                return fail(format!("epsilon must be > 0, got {epsilon}"))
            }
            RMode::Fixed(r) if !(r > 0.0) => return fail(format!("R must be > 0, got {r}")),
            _ => {}
        }
        if self.snapshot_every == 0 {
            return fail("snapshot_every must be >= 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.slack >= 0.0) {
            return fail(format!("slack must be >= 0, got {}", self.slack));
        }
        if let Some(axis) = &self.sweep {
            if axis.values.is_empty() || axis.values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return fail("sweep values must be positive".into());
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical (sorted-key, compact) JSON form.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let canonical = serde_json::to_string(&value).expect("value serializes");
        Sha256::digest(canonical.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// One child config per sweep value, or the config itself without a sweep.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>> {
        let Some(axis) = &self.sweep else {
            return Ok(vec![self.clone()]);
        };
        let as_count = |v: f64| -> Result<usize> {
            if v.fract() != 0.0 {
                return Err(Error::Config(format!("sweep value {v} must be an integer")));
            }
            Ok(v as usize)
        };
        axis.values
            .iter()
            .map(|&v| {
                let mut child = ExperimentConfig {
                    sweep: None,
                    ..self.clone()
                };
                let label = match axis.parameter {
                    SweepParameter::N => {
                        child.n = as_count(v)?;
                        "n"
                    }
                    SweepParameter::D => {
                        child.d = as_count(v)?;
                        "d"
                    }
                    SweepParameter::M => {
                        child.m = as_count(v)?;
                        "m"
                    }
                    SweepParameter::Steps => {
                        child.steps = as_count(v)?;
                        "steps"
                    }
                    SweepParameter::Seed => {
                        child.seed = as_count(v)? as u64;
                        "seed"
                    }
                    SweepParameter::Eta => {
                        child.eta = EtaMode::Fixed(v);
                        "eta"
                    }
                    SweepParameter::R => {
                        child.r = RMode::Fixed(v);
                        "R"
                    }
                    SweepParameter::ThetaHat => {
                        child.theta_hat = v;
                        "theta_hat"
                    }
                };
                child.name = format!("{}/{label}={v}", self.name);
                child.validate()?;
                Ok(child)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_files() {
        let cfg = ExperimentConfig::from_json(r#"{"n": 4, "eta": {"fixed": 0.01}}"#).unwrap();
        assert_eq!(cfg.n, 4);
        assert_eq!(cfg.eta, EtaMode::Fixed(0.01));
        assert_eq!(cfg.m, ExperimentConfig::default().m);
        let cfg = ExperimentConfig::from_json(r#"{"r": {"recommended": {"epsilon": 1.5}}, "checks": ["phi_fact"]}"#)
            .unwrap();
        assert_eq!(cfg.r, RMode::Recommended { epsilon: 1.5 });
        assert_eq!(cfg.checks, vec![CheckKind::PhiFact]);
    }

    #[test]
    fn invalid_configs() {
        for bad in [
            r#"{"checks": ["nope"]}"#,
            r#"{"n": 1}"#,
            r#"{"delta": 1.5}"#,
            r#"{"sweep": {"parameter": "m", "values": [0]}}"#,
            r#"{"typo": 3}"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn hash_ignores_field_order() {
        let a = ExperimentConfig::from_json(r#"{"n": 4, "m": 64}"#).unwrap();
        let b = ExperimentConfig::from_json(r#"{"m": 64, "n": 4}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig::from_json(r#"{"m": 65, "n": 4}"#).unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn sweep_expansion() {
        let cfg = ExperimentConfig::from_json(r#"{"sweep": {"parameter": "m", "values": [256, 1024, 4096]}}"#).unwrap();
        let kids = cfg.expand().unwrap();
        assert_eq!(kids.iter().map(|k| k.m).collect::<Vec<_>>(), vec![256, 1024, 4096]);
        assert!(kids.iter().all(|k| k.sweep.is_none()));
        let bad = ExperimentConfig::from_json(r#"{"sweep": {"parameter": "m", "values": [2.5]}}"#).unwrap();
        assert!(bad.expand().is_err());
    }
}
