//! Two-layer ReLU network `f(x) = (1/√m) Σ_r a_r max(w_rᵀx, 0)` trained by
//! full-batch gradient descent on the hidden layer only.

use std::path::Path;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::activation::{preactivations, ActivationSnapshot, BinaryMatrix};
use crate::dataset::{DataSpectrum, Dataset};
use crate::spectral::{frobenius_norm, RealMatrix};
use crate::textio::{self, Lines};
use crate::{seed, Error, Result};

/// Hidden weights `W (d×m)`, their initialization `W0`, and fixed output signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub w: RealMatrix,
    pub w0: RealMatrix,
    pub a: Vec<f64>,
    pub m: usize,
    pub d: usize,
    pub seed: u64,
}

/// `w_r(0) ~ N(0, I_d)` i.i.d. and `a_r` uniform on `{−1, +1}`.
pub fn init_network(d: usize, m: usize, seed: u64) -> Result<NetworkState> {
    if d == 0 || m == 0 {
        return Err(Error::Config(format!("need d >= 1 and m >= 1 (got d={d}, m={m})")));
    }
    // Neuron by neuron, so a wider network extends a narrower one with the same seed.
    let mut rng = seed::rng(seed);
    let mut w0 = RealMatrix::zeros(d, m);
    let mut a = Vec::with_capacity(m);
    for r in 0..m {
        for k in 0..d {
            w0[(k, r)] = rng.sample(StandardNormal);
        }
        a.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
    }
    Ok(NetworkState {
        w: w0.clone(),
        w0,
        a,
        m,
        d,
        seed,
    })
}

impl NetworkState {
    pub fn from_parts(w: RealMatrix, w0: RealMatrix, a: Vec<f64>, seed: u64) -> Result<Self> {
        if w.shape() != w0.shape() {
            return Err(Error::ShapeMismatch {
                left: w.shape(),
                right: w0.shape(),
            });
        }
        let (d, m) = w.shape();
        if a.len() != m {
            return Err(Error::LengthMismatch {
                left: m,
                right: a.len(),
            });
        }
        if a.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::Config("output signs must be exactly +1 or -1".into()));
        }
        Ok(NetworkState { w, w0, a, m, d, seed })
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        if self.d != data.d {
            return Err(Error::DimensionMismatch(format!(
                "network expects d={} but dataset has d={}",
                self.d, data.d
            )));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# overparam checkpoint v1\n");
        out += &format!("d {}\nm {}\nseed {}\n", self.d, self.m, self.seed);
        out += &format!(
            "a {}\n",
            self.a
                .iter()
                .map(|&s| if s > 0.0 { "+" } else { "-" })
                .collect::<String>()
        );
        for (tag, mat) in [("w", &self.w), ("w0", &self.w0)] {
            out += tag;
            out.push('\n');
            for k in 0..self.d {
                out += &textio::fmt_row(mat.row(k).iter().copied());
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let d: usize = lines.parse_field("d")?;
        let m: usize = lines.parse_field("m")?;
        let seed: u64 = lines.parse_field("seed")?;
        let a = lines
            .field("a")?
            .chars()
            .map(|c| match c {
                '+' => Ok(1.0),
                '-' => Ok(-1.0),
                _ => Err(Error::Parse(format!("bad sign `{c}`"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut read = |tag: &str| -> Result<RealMatrix> {
            lines.marker(tag)?;
            let mut data = Vec::with_capacity(d * m);
            for _ in 0..d {
                data.extend(lines.reals("weight row", m)?);
            }
            RealMatrix::new(d, m, data)
        };
        let w = read("w")?;
        let w0 = read("w0")?;
        Self::from_parts(w, w0, a, seed)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&textio::read_file(path)?)
    }
}

fn forward_from(z: &RealMatrix, a: &[f64]) -> Vec<f64> {
    let scale = 1.0 / (a.len() as f64).sqrt();
    (0..z.rows())
        .map(|i| {
            z.row(i)
                .iter()
                .zip(a)
                .map(|(&v, &s)| s * v.max(0.0))
                .sum::<f64>()
                * scale
        })
        .collect()
}

pub fn forward(net: &NetworkState, data: &Dataset) -> Result<Vec<f64>> {
    net.check_data(data)?;
    Ok(forward_from(&preactivations(&net.w, &data.x)?, &net.a))
}

/// `½ Σ (f_i − y_i)²`.
pub fn loss(f: &[f64], y: &[f64]) -> Result<f64> {
    if f.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: y.len(),
        });
    }
    Ok(0.5 * f.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
}

pub fn network_loss(net: &NetworkState, data: &Dataset) -> Result<f64> {
    loss(&forward(net, data)?, &data.y)
}

fn residual(f: &[f64], y: &[f64]) -> Vec<f64> {
    f.iter().zip(y).map(|(p, q)| p - q).collect()
}

/// Column `r` is `(1/√m) a_r Σ_i (f_i − y_i) 𝕀{w_rᵀx_i ≥ 0} x_i`.
pub fn gradient_naive(net: &NetworkState, data: &Dataset) -> Result<RealMatrix> {
    net.check_data(data)?;
    let z = preactivations(&net.w, &data.x)?;
    let res = residual(&forward_from(&z, &net.a), &data.y);
    let scale = 1.0 / (net.m as f64).sqrt();
    let mut g = RealMatrix::zeros(net.d, net.m);
    for r in 0..net.m {
        let mut acc = vec![0.0; net.d];
        for (i, &ri) in res.iter().enumerate() {
            if z[(i, r)] >= 0.0 {
                for (k, v) in acc.iter_mut().enumerate() {
                    *v += ri * data.x[(k, i)];
                }
            }
        }
        for (k, v) in acc.into_iter().enumerate() {
            g[(k, r)] = scale * net.a[r] * v;
        }
    }
    Ok(g)
}

fn gradient_from(x: &RealMatrix, psi: &BinaryMatrix, res: &[f64], a: &[f64]) -> RealMatrix {
    let (n, m) = (psi.rows(), psi.cols());
    let inner = RealMatrix::from_fn(n, m, |i, r| if psi.get(i, r) { res[i] * a[r] } else { 0.0 });
    x.matmul(&inner).scaled(1.0 / (m as f64).sqrt())
}

/// `∇L = (1/√m) X D_res Ψ D_a`.
pub fn gradient_matrix(net: &NetworkState, data: &Dataset) -> Result<RealMatrix> {
    net.check_data(data)?;
    let z = preactivations(&net.w, &data.x)?;
    let res = residual(&forward_from(&z, &net.a), &data.y);
    let psi = BinaryMatrix::from_fn(z.rows(), z.cols(), |i, r| z[(i, r)] >= 0.0);
    Ok(gradient_from(&data.x, &psi, &res, &net.a))
}

fn check_direction(net: &NetworkState, xi: &RealMatrix) -> Result<()> {
    if xi.shape() != net.w.shape() {
        return Err(Error::DimensionMismatch(format!(
            "direction is {:?} but weights are {:?}",
            xi.shape(),
            net.w.shape()
        )));
    }
    Ok(())
}

/// `vec(Ξ)ᵀ ∇²L vec(Ξ) = Σ_i [(1/√m) Σ_r a_r ψ_ir ⟨ξ_r, x_i⟩]²`, in `O(ndm)`.
pub fn directional_curvature(net: &NetworkState, data: &Dataset, xi: &RealMatrix) -> Result<f64> {
    net.check_data(data)?;
    check_direction(net, xi)?;
    let z = preactivations(&net.w, &data.x)?;
    let proj = preactivations(xi, &data.x)?;
    let scale = 1.0 / (net.m as f64).sqrt();
    Ok((0..data.n)
        .map(|i| {
            let v: f64 = (0..net.m)
                .filter(|&r| z[(i, r)] >= 0.0)
                .map(|r| net.a[r] * proj[(i, r)])
                .sum::<f64>()
                * scale;
            v * v
        })
        .sum())
}

/// The same quadratic form summed block by block:
/// `Σ_r ξ_rᵀ (1/m) X D_{ψ_r} Xᵀ ξ_r + Σ_{r≠s} ξ_rᵀ (a_r a_s/m) X D_{ψ_r} D_{ψ_s} Xᵀ ξ_s`.
/// Costs `O(n m²)`; meant for cross-checking small instances.
pub fn directional_curvature_blocks(net: &NetworkState, data: &Dataset, xi: &RealMatrix) -> Result<f64> {
    net.check_data(data)?;
    check_direction(net, xi)?;
    let z = preactivations(&net.w, &data.x)?;
    let proj = preactivations(xi, &data.x)?;
    let m = net.m as f64;
    let mut total = 0.0;
    for r in 0..net.m {
        for s in 0..net.m {
            let coef = if r == s { 1.0 } else { net.a[r] * net.a[s] } / m;
            let mut block = 0.0;
            for i in 0..data.n {
                if z[(i, r)] >= 0.0 && z[(i, s)] >= 0.0 {
                    block += proj[(i, r)] * proj[(i, s)];
                }
            }
            total += coef * block;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eta: f64,
    pub steps: usize,
    pub seed: u64,
    pub snapshot_every: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("step size must be finite and >= 0, got {}", self.eta)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::Config("snapshot_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    /// `L(W(k))` for `k = 0..=steps`.
    pub losses: Vec<f64>,
    /// `‖∇L(W(k))‖_F` for `k = 0..steps`.
    pub grad_norms: Vec<f64>,
    /// `L(k+1)/L(k)`, or 1 when `L(k) = 0`.
    pub contraction_ratios: Vec<f64>,
}

/// Everything known about step `k → k+1` once `W(k+1)` has been evaluated.
pub struct StepState<'a> {
    pub k: usize,
    /// Network at `W(k)`.
    pub net: &'a NetworkState,
    pub data: &'a Dataset,
    pub grad: &'a RealMatrix,
    pub psi: &'a BinaryMatrix,
    pub loss: f64,
    pub next_loss: f64,
    pub eta: f64,
}

impl StepState<'_> {
    pub fn snapshot(&self) -> ActivationSnapshot {
        ActivationSnapshot::from_psi(self.psi.clone(), self.k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub net: NetworkState,
    pub trace: LossTrace,
    /// `Ψ(k)` at `k = 0`, every `snapshot_every` steps, and the final step.
    pub snapshots: Vec<ActivationSnapshot>,
}

struct Evaluation {
    psi: BinaryMatrix,
    res: Vec<f64>,
    loss: f64,
}

fn evaluate(w: &RealMatrix, a: &[f64], data: &Dataset) -> Result<Evaluation> {
    let z = preactivations(w, &data.x)?;
    let f = forward_from(&z, a);
    let res = residual(&f, &data.y);
    let loss = 0.5 * res.iter().map(|r| r * r).sum::<f64>();
    let psi = BinaryMatrix::from_fn(z.rows(), z.cols(), |i, r| z[(i, r)] >= 0.0);
    Ok(Evaluation { psi, res, loss })
}

/// `W(k+1) = W(k) − η ∇L(W(k))`, calling `observer` after each step.
pub fn gd_train<F>(
    mut net: NetworkState,
    data: &Dataset,
    cfg: &TrainConfig,
    mut observer: F,
) -> Result<TrainOutcome>
where
    F: FnMut(&StepState<'_>) -> Result<()>,
{
    cfg.validate()?;
    net.check_data(data)?;
    let mut cur = evaluate(&net.w, &net.a, data)?;
    if !cur.loss.is_finite() {
        return Err(Error::NonFiniteLoss { step: 0 });
    }
    let mut trace = LossTrace {
        losses: vec![cur.loss],
        grad_norms: Vec::with_capacity(cfg.steps),
        contraction_ratios: Vec::with_capacity(cfg.steps),
    };
    let mut snapshots = vec![ActivationSnapshot::from_psi(cur.psi.clone(), 0)];
    for k in 0..cfg.steps {
        let grad = gradient_from(&data.x, &cur.psi, &cur.res, &net.a);
        let mut next_w = net.w.clone();
        for (w, g) in next_w.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *w -= cfg.eta * g;
        }
        let next = evaluate(&next_w, &net.a, data)?;
        if !next.loss.is_finite() {
            return Err(Error::NonFiniteLoss { step: k + 1 });
        }
        observer(&StepState {
            k,
            net: &net,
            data,
            grad: &grad,
            psi: &cur.psi,
            loss: cur.loss,
            next_loss: next.loss,
            eta: cfg.eta,
        })?;
        trace.grad_norms.push(frobenius_norm(&grad));
        trace.contraction_ratios.push(if cur.loss > 0.0 {
            next.loss / cur.loss
        } else {
            1.0
        });
        trace.losses.push(next.loss);
        net.w = next_w;
        cur = next;
        let step = k + 1;
        if step % cfg.snapshot_every == 0 || step == cfg.steps {
            snapshots.push(ActivationSnapshot::from_psi(cur.psi.clone(), step));
        }
    }
    Ok(TrainOutcome {
        net,
        trace,
        snapshots,
    })
}

/// `η = λ* / (2 κ² n^{3/2})`.
pub fn step_size_recommended(spec: &DataSpectrum, n: usize) -> Result<f64> {
    let kappa = spec.kappa.ok_or(Error::RankDeficient)?;
    Ok(spec.lambda_star / (2.0 * kappa * kappa * (n as f64).powf(1.5)))
}
