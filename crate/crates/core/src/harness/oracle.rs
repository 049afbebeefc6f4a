use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::oracles::{self, MCEstimate};
use crate::{seed, Result};

/// One line of the closed-form / quadrature / Monte Carlo comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub oracle: String,
    pub theta: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub closed_form: f64,
    pub quadrature: Option<f64>,
    pub mc: Option<MCEstimate>,
}

impl OracleRow {
    /// Closed form within `radius` standard errors of the Monte Carlo mean.
    pub fn mc_agrees(&self, radius: f64) -> Option<bool> {
        self.mc.map(|e| e.covers(self.closed_form, radius))
    }
}

pub const ORACLE_HEADER: &str = "oracle,theta,R,closed_form,quadrature,mc_mean,mc_stderr,samples,seed";

/// Pair and equilateral-triple activations for every `θ`, the band
/// probability for every `R`, and the joint flip probability on the
/// `(θ, R)` grid (closed form = leading asymptotic term).
pub fn oracle_table(thetas: &[f64], rs: &[f64], samples: usize, seed: u64) -> Result<Vec<OracleRow>> {
    let mut rows = Vec::new();
    let mut idx = 0u64;
    let mut next_seed = || {
        idx += 1;
        seed::derive_indexed(seed, "oracle", idx)
    };
    for &theta in thetas {
        rows.push(OracleRow {
            oracle: "pair_activation".into(),
            theta: Some(theta),
            r: None,
            closed_form: oracles::pair_activation_expectation(theta)?,
            quadrature: None,
            mc: Some(oracles::mc_pair_activation(theta, samples, next_seed())?),
        });
        if theta <= 2.0 * PI / 3.0 {
            rows.push(OracleRow {
                oracle: "triple_activation".into(),
                theta: Some(theta),
                r: None,
                closed_form: oracles::triple_activation_expectation(theta, theta, theta)?,
                quadrature: None,
                mc: Some(oracles::mc_triple_activation(theta, theta, theta, samples, next_seed())?),
            });
        }
    }
    for &r in rs {
        rows.push(OracleRow {
            oracle: "gauss_band".into(),
            theta: None,
            r: Some(r),
            closed_form: oracles::gauss_band_prob(r),
            quadrature: Some(oracles::gauss_band_prob_quadrature(r).value),
            mc: Some(oracles::mc_gauss_band(r, samples, next_seed())?),
        });
    }
    for &theta in thetas {
        if !(theta > 0.0 && theta < PI) {
            continue;
        }
        for &r in rs {
            rows.push(OracleRow {
                oracle: "joint_flip".into(),
                theta: Some(theta),
                r: Some(r),
                closed_form: oracles::joint_flip_prob_asymptotic(theta, r)?,
                quadrature: Some(oracles::joint_flip_prob_quadrature(theta, r)?.value),
                mc: Some(oracles::mc_joint_flip(theta, r, samples.max(10_000), next_seed())?),
            });
        }
    }
    Ok(rows)
}

pub fn oracle_csv(rows: &[OracleRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    let mut out = String::from(ORACLE_HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.16e},{},{},{},{},{}",
            row.oracle,
            opt(row.theta),
            opt(row.r),
            row.closed_form,
            opt(row.quadrature),
            opt(row.mc.map(|e| e.mean)),
            opt(row.mc.map(|e| e.stderr)),
            row.mc.map(|e| e.samples.to_string()).unwrap_or_default(),
            row.mc.map(|e| e.seed.to_string()).unwrap_or_default(),
        );
    }
    out
}
