//! Training sets on the unit sphere and their angular geometry.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::check::BoundCheck;
use crate::oracles::pair_activation_expectation;
use crate::spectral::{self, RealMatrix, SYMMETRY_TOL};
use crate::textio::{self, Lines};
use crate::{seed, Error, Result};

const UNIT_NORM_TOL: f64 = 1e-12;

/// `n` unit-norm samples stored as the columns of a `d×n` matrix, with
/// labels in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: RealMatrix,
    pub y: Vec<f64>,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub theta_hat: f64,
}

impl Dataset {
    /// Validates unit-norm columns and label range. Co-aligned columns are
    /// accepted here and rejected by [`angle_profile`].
    pub fn new(x: RealMatrix, y: Vec<f64>, seed: u64, theta_hat: f64) -> Result<Self> {
        let (d, n) = x.shape();
        if y.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: y.len(),
            });
        }
        for i in 0..n {
            let norm = x.column(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidMatrix(format!("column {i} has norm {norm}")));
            }
        }
        if let Some(v) = y.iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::InvalidMatrix(format!("label {v} outside [-1, 1]")));
        }
        Ok(Dataset {
            x,
            y,
            n,
            d,
            seed,
            theta_hat,
        })
    }

    pub fn sample(&self, i: usize) -> Vec<f64> {
        self.x.column(i)
    }

    /// `XᵀX`.
    pub fn gram(&self) -> RealMatrix {
        self.x.col_gram()
    }

    /// Writes the dataset as a text record (column-major `X`, 17 significant digits).
    pub fn save(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&textio::read_file(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# overparam dataset v1\n");
        out += &format!("n {}\nd {}\nseed {}\n", self.n, self.d, self.seed);
        out += &format!("theta_hat {}\nx\n", textio::fmt_f64(self.theta_hat));
        for i in 0..self.n {
            out += &textio::fmt_row(self.x.column(i));
            out.push('\n');
        }
        out += "y\n";
        out += &textio::fmt_row(self.y.iter().copied());
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let n: usize = lines.parse_field("n")?;
        let d: usize = lines.parse_field("d")?;
        let seed: u64 = lines.parse_field("seed")?;
        let theta_hat: f64 = lines.parse_field("theta_hat")?;
        lines.marker("x")?;
        let mut x = RealMatrix::zeros(d.max(1), n.max(1));
        for i in 0..n {
            for (k, v) in lines.reals("sample column", d)?.into_iter().enumerate() {
                x[(k, i)] = v;
            }
        }
        lines.marker("y")?;
        let y = lines.reals("labels", n)?;
        let x = RealMatrix::new(d, n, x.as_slice().to_vec())?;
        Dataset::new(x, y, seed, theta_hat)
    }
}

/// Pairwise angles and their extremes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleProfile {
    pub theta: RealMatrix,
    pub theta_min: f64,
    pub theta_max: f64,
    /// `min{θ_min, π − θ_max}`.
    pub theta_star: f64,
    /// Separation that was enforced when the data were generated.
    pub theta_hat: f64,
}

/// The angle-based matrix: diagonal 1/2, off-diagonal `(π − θ_ij)/(2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MhoMatrix {
    pub entries: RealMatrix,
}

/// Spectral summary of a data matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpectrum {
    /// `λ_min(XᵀX)`, exactly 0 when `d < n`.
    pub lambda_min_gram: f64,
    pub lambda_max_gram: f64,
    /// `‖X‖₂`.
    pub spectral_norm: f64,
    /// `σ_min(X)`.
    pub sigma_min: f64,
    /// `‖X‖₂ / σ_min(X)`; `None` when `X` is rank deficient.
    pub kappa: Option<f64>,
    /// `λ_min` of the angle-based matrix.
    pub lambda_star: f64,
    pub rank_deficient: bool,
}

fn unit_gaussian(rng: &mut seed::Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn pair_angle(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

/// Separation of the lines spanned by two unit vectors, in `[0, π/2]`.
fn line_separation(a: &[f64], b: &[f64]) -> f64 {
    let t = pair_angle(a, b);
    t.min(PI - t)
}

/// Draws `n` normalized Gaussian vectors in `R^d`, rejecting any candidate
/// whose line lies within `theta_hat` of an accepted one, and uniform labels
/// on `[-1, 1]`.
pub fn sample_sphere_dataset(
    n: usize,
    d: usize,
    theta_hat: f64,
    seed: u64,
    max_rejects: usize,
) -> Result<Dataset> {
    if n < 2 || d < 1 {
        return Err(Error::Config(format!("need n >= 2 and d >= 1 (got n={n}, d={d})")));
    }
    if !(0.0..PI / 3.0).contains(&theta_hat) {
        return Err(Error::BadAngle(theta_hat));
    }
    let mut rng = seed::rng(seed);
    let mut accepted: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut rejects = 0usize;
    while accepted.len() < n {
        let cand = unit_gaussian(&mut rng, d);
        let ok = accepted.iter().all(|a| {
            let sep = line_separation(a, &cand);
            sep > 0.0 && sep >= theta_hat
        });
        if ok {
            accepted.push(cand);
            rejects = 0;
        } else {
            rejects += 1;
            if rejects >= max_rejects {
                return Err(Error::SeparationInfeasible {
                    n,
                    d,
                    theta_hat,
                    rejects,
                });
            }
        }
    }
    let x = RealMatrix::from_fn(d, n, |k, i| accepted[i][k]);
    let y = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    Dataset::new(x, y, seed, theta_hat)
}

/// Pairwise angles `θ_ij = arccos⟨x_i, x_j⟩` with extremes over `i ≠ j`.
///
/// A single-sample dataset reports `θ_min = θ_max = θ* = π/2`.
pub fn angle_profile(data: &Dataset) -> Result<AngleProfile> {
    let n = data.n;
    let cols: Vec<Vec<f64>> = (0..n).map(|i| data.sample(i)).collect();
    let mut theta = RealMatrix::zeros(n, n);
    let mut theta_min = f64::INFINITY;
    let mut theta_max = f64::NEG_INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let t = pair_angle(&cols[i], &cols[j]);
            if t.min(PI - t) == 0.0 {
                return Err(Error::DegenerateAngles { i, j });
            }
            theta[(i, j)] = t;
            theta[(j, i)] = t;
            theta_min = theta_min.min(t);
            theta_max = theta_max.max(t);
        }
    }
    if n < 2 {
        theta_min = PI / 2.0;
        theta_max = PI / 2.0;
    }
    Ok(AngleProfile {
        theta,
        theta_min,
        theta_max,
        theta_star: theta_min.min(PI - theta_max),
        theta_hat: data.theta_hat,
    })
}

pub fn mho_matrix(profile: &AngleProfile) -> MhoMatrix {
    let n = profile.theta.rows();
    MhoMatrix {
        entries: RealMatrix::from_fn(n, n, |i, j| {
            pair_activation_expectation(if i == j { 0.0 } else { profile.theta[(i, j)] })
                .expect("angles lie in [0, π]")
        }),
    }
}

/// `λ* = λ_min` of the angle-based matrix.
pub fn lambda_star(mho: &MhoMatrix) -> f64 {
    spectral::symmetric_spectrum(&mho.entries, SYMMETRY_TOL)
        .expect("angle-based matrix is symmetric")
        .min()
}

/// Partial sum of the arcsin Hadamard-power series
/// `1/4 · 11ᵀ + (1/2π) Σ_{ν<terms} (2ν−1)!!/(2ν)!! · G^∘(2ν+1)/(2ν+1)`.
pub fn mho_arcsin_partial(gram: &RealMatrix, terms: usize) -> Result<RealMatrix> {
    if !gram.is_square() {
        return Err(Error::NonSquare {
            rows: gram.rows(),
            cols: gram.cols(),
        });
    }
    if terms == 0 {
        return Err(Error::Config("arcsin series needs at least one term".into()));
    }
    let n = gram.rows();
    for i in 0..n {
        if (gram[(i, i)] - 1.0).abs() > 1e-9 {
            return Err(Error::BadGram {
                index: i,
                value: gram[(i, i)],
            });
        }
    }
    // Coefficients c_ν/(2ν+1) with c_0 = 1, c_{ν+1} = c_ν (2ν+1)/(2ν+2).
    let mut coeffs = Vec::with_capacity(terms);
    let mut c = 1.0f64;
    for nu in 0..terms {
        coeffs.push(c / (2 * nu + 1) as f64);
        c *= (2 * nu + 1) as f64 / (2 * nu + 2) as f64;
    }
    Ok(RealMatrix::from_fn(n, n, |i, j| {
        let g = gram[(i, j)];
        let g2 = g * g;
        let mut power = g;
        let mut sum = 0.0;
        for &coef in &coeffs {
            sum += coef * power;
            power *= g2;
        }
        0.25 + sum / (2.0 * PI)
    }))
}

/// Lower and upper halves of the `λ_min(XᵀX)/4 ≤ λ* ≤ 1/2` bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaStarBracket {
    pub lower: BoundCheck,
    pub upper: BoundCheck,
}

impl LambdaStarBracket {
    pub fn satisfied(&self) -> bool {
        self.lower.satisfied && self.upper.satisfied
    }
}

pub fn lambda_star_bounds(spec: &DataSpectrum) -> LambdaStarBracket {
    LambdaStarBracket {
        lower: BoundCheck::lower(
            "lambda_star_lower",
            spec.lambda_star,
            spec.lambda_min_gram / 4.0,
        ),
        upper: BoundCheck::upper("lambda_star_upper", spec.lambda_star, 0.5),
    }
}

pub fn data_spectrum(data: &Dataset) -> Result<DataSpectrum> {
    let gram = data.gram();
    let spec = spectral::symmetric_spectrum(&gram, SYMMETRY_TOL)?;
    let lambda_max_gram = spec.max();
    let mut lambda_min_gram = spec.min().max(0.0);
    if data.d < data.n {
        lambda_min_gram = 0.0;
    }
    let rank_deficient = lambda_min_gram <= 1e-12 * lambda_max_gram;
    let spectral_norm = lambda_max_gram.sqrt();
    let sigma_min = lambda_min_gram.sqrt();
    let kappa = (!rank_deficient).then(|| spectral_norm / sigma_min);
    let profile = angle_profile(data)?;
    Ok(DataSpectrum {
        lambda_min_gram,
        lambda_max_gram,
        spectral_norm,
        sigma_min,
        kappa,
        lambda_star: lambda_star(&mho_matrix(&profile)),
        rank_deficient,
    })
}

/// `Σ_{i,j} ⟨x_i, x_j⟩⁴`, square-rooted: the data factor of the curvature bound.
pub fn fourth_moment_root(data: &Dataset) -> f64 {
    data.gram()
        .as_slice()
        .iter()
        .map(|g| g.powi(4))
        .sum::<f64>()
        .sqrt()
}
