//! Activation matrices `Ψ = 𝕀{XᵀW ≥ 0}` stored as packed bits.
//!
//! Rows index samples and columns index neurons. Gram matrices of a binary
//! matrix are integer-valued and are computed exactly with popcounts.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spectral::{self, RealMatrix};
use crate::textio::{self, Lines};
use crate::{Error, Result};

const WORD: usize = 64;

/// Dense `rows×cols` 0/1 matrix, each row packed into `u64` words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words = cols.div_ceil(WORD);
        BinaryMatrix {
            rows,
            cols,
            words,
            bits: vec![0; rows * words],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut out = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                if f(i, j) {
                    out.set(i, j, true);
                }
            }
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / WORD] >> (j % WORD) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        let w = &mut self.bits[i * self.words + j / WORD];
        let mask = 1u64 << (j % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    pub fn row_words(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn row_count(&self, i: usize) -> u64 {
        self.row_words(i).iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn ones(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn to_real(&self) -> RealMatrix {
        RealMatrix::from_fn(self.rows, self.cols, |i, j| if self.get(i, j) { 1.0 } else { 0.0 })
    }

    pub fn transpose(&self) -> BinaryMatrix {
        BinaryMatrix::from_fn(self.cols, self.rows, |j, i| self.get(i, j))
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming(&self, other: &BinaryMatrix) -> Result<u64> {
        self.same_shape(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| u64::from((a ^ b).count_ones()))
            .sum())
    }

    fn same_shape(&self, other: &BinaryMatrix) -> Result<()> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::ShapeMismatch {
                left: (self.rows, self.cols),
                right: (other.rows, other.cols),
            });
        }
        Ok(())
    }

    fn zip_rows(&self, other: &BinaryMatrix, f: impl Fn(u64, u64) -> u64) -> BinaryMatrix {
        BinaryMatrix {
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
            ..self.clone()
        }
    }

    /// `ΨΨᵀ` as exact integers.
    pub fn row_gram_counts(&self) -> Vec<u64> {
        self.cross_counts(self)
    }

    /// `A Bᵀ` for binary `A = self`, `B = other` with equal column counts.
    fn cross_counts(&self, other: &BinaryMatrix) -> Vec<u64> {
        let n = self.rows;
        let p = other.rows;
        let mut out = vec![0u64; n * p];
        out.par_chunks_mut(p.max(1)).enumerate().for_each(|(i, row)| {
            let a = self.row_words(i);
            for (j, slot) in row.iter_mut().enumerate() {
                let b = other.row_words(j);
                *slot = a.iter().zip(b).map(|(x, y)| u64::from((x & y).count_ones())).sum();
            }
        });
        out
    }

    /// `ΨΨᵀ` as a real matrix.
    pub fn row_gram(&self) -> RealMatrix {
        let n = self.rows;
        let counts = self.row_gram_counts();
        RealMatrix::new(n, n, counts.into_iter().map(|c| c as f64).collect())
            .expect("non-empty gram")
    }

    fn hex_row(&self, i: usize) -> String {
        self.row_words(i)
            .iter()
            .map(|w| format!("{w:016x}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Pre-activations `XᵀW` (`n×m`), the single source of every sign test.
pub fn preactivations(w: &RealMatrix, x: &RealMatrix) -> Result<RealMatrix> {
    if w.rows() != x.rows() {
        return Err(Error::DimensionMismatch(format!(
            "weights have dimension {} but samples have dimension {}",
            w.rows(),
            x.rows()
        )));
    }
    Ok(x.transpose_matmul(w))
}

/// `Ψ_ir = 𝕀{w_rᵀx_i ≥ 0}`; ties activate.
pub fn activation_matrix(w: &RealMatrix, x: &RealMatrix) -> Result<BinaryMatrix> {
    let z = preactivations(w, x)?;
    Ok(BinaryMatrix::from_fn(z.rows(), z.cols(), |i, r| z[(i, r)] >= 0.0))
}

/// `Ψ(k)` with cached spectral statistics.
///
/// `sigma_min` is `λ_min(ΨΨᵀ)^{1/2}`, which is 0 whenever `n > m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationSnapshot {
    pub k: usize,
    pub psi: BinaryMatrix,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub frob_sq: f64,
    pub row_norm_sq: Vec<f64>,
}

impl ActivationSnapshot {
    pub fn from_psi(psi: BinaryMatrix, k: usize) -> Self {
        let n = psi.rows();
        let gram = psi.row_gram();
        let (lo, hi) = spectral::gram_extremes(&gram);
        let sigma_min = if n > psi.cols() { 0.0 } else { lo.max(0.0).sqrt() };
        let row_norm_sq: Vec<f64> = (0..n).map(|i| gram[(i, i)]).collect();
        ActivationSnapshot {
            k,
            sigma_min,
            sigma_max: hi.max(0.0).sqrt(),
            frob_sq: psi.ones() as f64,
            row_norm_sq,
            psi,
        }
    }

    pub fn n(&self) -> usize {
        self.psi.rows()
    }

    pub fn m(&self) -> usize {
        self.psi.cols()
    }

    /// Text record with the bit rows as hex words.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# overparam activation snapshot v1\n");
        out += &format!("k {}\nn {}\nm {}\n", self.k, self.n(), self.m());
        out += &format!(
            "sigma_min {}\nsigma_max {}\nfrob_sq {}\nrow_norm_sq {}\npsi\n",
            textio::fmt_f64(self.sigma_min),
            textio::fmt_f64(self.sigma_max),
            textio::fmt_f64(self.frob_sq),
            textio::fmt_row(self.row_norm_sq.iter().copied())
        );
        for i in 0..self.n() {
            out += &self.psi.hex_row(i);
            out.push('\n');
        }
        out
    }

    /// Parses a snapshot record. Cached statistics are recomputed from the
    /// bits and must match the stored values.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let k: usize = lines.parse_field("k")?;
        let n: usize = lines.parse_field("n")?;
        let m: usize = lines.parse_field("m")?;
        let sigma_min: f64 = lines.parse_field("sigma_min")?;
        let sigma_max: f64 = lines.parse_field("sigma_max")?;
        let frob_sq: f64 = lines.parse_field("frob_sq")?;
        let row_norm_sq = textio::parse_reals(lines.field("row_norm_sq")?)?;
        lines.marker("psi")?;
        let mut psi = BinaryMatrix::zeros(n, m);
        for i in 0..n {
            let line = lines.raw_line("bit row")?;
            let words: Vec<u64> = line
                .split_whitespace()
                .map(|t| u64::from_str_radix(t, 16).map_err(|_| Error::Parse(format!("bad hex `{t}`"))))
                .collect::<Result<_>>()?;
            if words.len() != psi.words {
                return Err(Error::Parse(format!("row {i}: expected {} words", psi.words)));
            }
            psi.bits[i * psi.words..(i + 1) * psi.words].copy_from_slice(&words);
        }
        let snap = ActivationSnapshot::from_psi(psi, k);
        if snap.frob_sq != frob_sq
            || snap.row_norm_sq != row_norm_sq
            || snap.sigma_min != sigma_min
            || snap.sigma_max != sigma_max
        {
            return Err(Error::Parse("cached statistics disagree with bits".into()));
        }
        Ok(snap)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&textio::read_file(path)?)
    }
}

pub fn snapshot(w: &RealMatrix, x: &RealMatrix, k: usize) -> Result<ActivationSnapshot> {
    Ok(ActivationSnapshot::from_psi(activation_matrix(w, x)?, k))
}

/// Movement of `Ψ(k)` and `W(k)` away from initialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    /// `‖Ψ(k) − Ψ(0)‖_F²`, the number of flipped entries.
    pub frob_sq_delta: f64,
    /// `‖Ψ(k) − Ψ(0)‖₂`.
    pub spectral_delta: f64,
    pub row_flip_counts: Vec<u64>,
    /// `max_r ‖w_r(k) − w_r(0)‖₂`.
    pub max_weight_drift: f64,
}

/// Column norms `‖w_r(k) − w_r(0)‖₂`.
pub fn weight_drifts(wk: &RealMatrix, w0: &RealMatrix) -> Result<Vec<f64>> {
    let diff = wk.sub(w0)?;
    let mut sq = vec![0.0; diff.cols()];
    for row in 0..diff.rows() {
        for (acc, v) in sq.iter_mut().zip(diff.row(row)) {
            *acc += v * v;
        }
    }
    Ok(sq.into_iter().map(f64::sqrt).collect())
}

pub fn perturbation(
    now: &ActivationSnapshot,
    init: &ActivationSnapshot,
    wk: &RealMatrix,
    w0: &RealMatrix,
) -> Result<PerturbationReport> {
    now.psi.same_shape(&init.psi)?;
    let drifts = weight_drifts(wk, w0)?;
    if drifts.len() != now.m() {
        return Err(Error::ShapeMismatch {
            left: (now.n(), now.m()),
            right: wk.shape(),
        });
    }
    let n = now.n();
    // Δ = pos − neg with disjoint supports.
    let pos = now.psi.zip_rows(&init.psi, |a, b| a & !b);
    let neg = now.psi.zip_rows(&init.psi, |a, b| b & !a);
    let pp = pos.cross_counts(&pos);
    let nn = neg.cross_counts(&neg);
    let pn = pos.cross_counts(&neg);
    let gram = RealMatrix::from_fn(n, n, |i, j| {
        pp[i * n + j] as f64 + nn[i * n + j] as f64 - pn[i * n + j] as f64 - pn[j * n + i] as f64
    });
    let row_flip_counts: Vec<u64> = (0..n).map(|i| pp[i * n + i] + nn[i * n + i]).collect();
    let (_, hi) = spectral::gram_extremes(&gram);
    Ok(PerturbationReport {
        frob_sq_delta: row_flip_counts.iter().sum::<u64>() as f64,
        spectral_delta: hi.max(0.0).sqrt(),
        row_flip_counts,
        max_weight_drift: drifts.into_iter().fold(0.0, f64::max),
    })
}

/// Entries whose initial pre-activation lies in the band `|w_r(0)ᵀx_i| ≤ R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipSets {
    pub candidate: BinaryMatrix,
    pub candidate_counts: Vec<u64>,
    pub r: f64,
}

pub fn flip_candidate_sets(w0: &RealMatrix, x: &RealMatrix, r: f64) -> Result<FlipSets> {
    if !(r > 0.0) {
        return Err(Error::BadR(r));
    }
    let z = preactivations(w0, x)?;
    let candidate = BinaryMatrix::from_fn(z.rows(), z.cols(), |i, c| z[(i, c)].abs() <= r);
    let candidate_counts = (0..z.rows()).map(|i| candidate.row_count(i)).collect();
    Ok(FlipSets {
        candidate,
        candidate_counts,
        r,
    })
}

/// Flips of neurons that stayed within `R` of initialization but fall outside
/// the candidate set, as `(i, r)` pairs. Empty when containment holds.
pub fn uncontained_flips(
    sets: &FlipSets,
    init: &BinaryMatrix,
    now: &BinaryMatrix,
    drifts: &[f64],
) -> Result<Vec<(usize, usize)>> {
    init.same_shape(now)?;
    init.same_shape(&sets.candidate)?;
    let mut out = Vec::new();
    for i in 0..init.rows() {
        for r in 0..init.cols() {
            if drifts[r] <= sets.r && init.get(i, r) != now.get(i, r) && !sets.candidate.get(i, r) {
                out.push((i, r));
            }
        }
    }
    Ok(out)
}

/// A recommended band radius together with whether it leaves `(0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecommendedRadius {
    pub r: f64,
    /// `R ≥ 1/2`: the small-band regime assumed downstream does not apply.
    pub outside_band: bool,
}

/// `R = √(π λ* sin θ* / ((2 + ε) n))`.
pub fn r_recommended(lambda_star: f64, theta_star: f64, n: usize, epsilon: f64) -> Result<RecommendedRadius> {
    if !(theta_star > 0.0 && theta_star <= FRAC_PI_2) {
        return Err(Error::BadAngle(theta_star));
    }
    if !(lambda_star > 0.0) || n == 0 || !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "R needs lambda_star > 0, n >= 1, epsilon > 0 (got {lambda_star}, {n}, {epsilon})"
        )));
    }
    let r = (PI * lambda_star * theta_star.sin() / ((2.0 + epsilon) * n as f64)).sqrt();
    Ok(RecommendedRadius {
        r,
        outside_band: r >= 0.5,
    })
}

/// `σ_min²(Ψ) ≥ min_i ‖ψ̃_i‖² + λ_min(Υ)` with `Υ = ΨΨᵀ − diag(ΨΨᵀ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowGramDecomposition {
    pub diag_min: f64,
    pub upsilon_lambda_min: f64,
    pub bound: f64,
}

pub fn row_gram_decomposition(snap: &ActivationSnapshot) -> Result<RowGramDecomposition> {
    let (n, m) = (snap.n(), snap.m());
    if n > m {
        return Err(Error::WideMatrixRequired { n, m });
    }
    let mut upsilon = snap.psi.row_gram();
    for i in 0..n {
        upsilon[(i, i)] = 0.0;
    }
    let diag_min = snap.row_norm_sq.iter().copied().fold(f64::INFINITY, f64::min);
    let (lo, _) = spectral::gram_extremes(&upsilon);
    Ok(RowGramDecomposition {
        diag_min,
        upsilon_lambda_min: lo,
        bound: diag_min + lo,
    })
}

/// `Σ_{r≠s} √(⟨ψ_r, ψ_s⟩ ‖ψ_r‖ ‖ψ_s‖)` over the columns of `Ψ`.
///
/// Each term is `(c_r c_s)^{1/4} √o_rs` with column counts `c` and overlaps
/// `o`, all small integers, so square roots come from a lookup table.
pub fn column_pair_sum(psi: &BinaryMatrix) -> f64 {
    let cols = psi.transpose();
    let m = cols.rows();
    let n = psi.rows();
    let root: Vec<f64> = (0..=n).map(|o| (o as f64).sqrt()).collect();
    let quarter: Vec<f64> = (0..m).map(|r| root[cols.row_count(r) as usize].sqrt()).collect();
    let single = cols.words == 1;
    let partial: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|r| {
            if quarter[r] == 0.0 {
                return 0.0;
            }
            let mut acc = 0.0;
            if single {
                let a = cols.bits[r];
                for (&b, &q) in cols.bits[r + 1..].iter().zip(&quarter[r + 1..]) {
                    acc += q * root[(a & b).count_ones() as usize];
                }
            } else {
                let a = cols.row_words(r);
                for s in (r + 1)..m {
                    let o: u32 = a.iter().zip(cols.row_words(s)).map(|(x, y)| (x & y).count_ones()).sum();
                    acc += quarter[s] * root[o as usize];
                }
            }
            acc * quarter[r]
        })
        .collect();
    2.0 * partial.iter().sum::<f64>()
}

/// `‖ΨΨᵀ‖_F² = ‖ΨᵀΨ‖_F²` as an exact integer.
pub fn gram_frobenius_sq(psi: &BinaryMatrix) -> u128 {
    let counts = if psi.rows() <= psi.cols() {
        psi.row_gram_counts()
    } else {
        psi.transpose().row_gram_counts()
    };
    counts.iter().map(|&c| u128::from(c) * u128::from(c)).sum()
}

/// Both sides of
/// `Σ_{r≠s} √(⟨ψ_r,ψ_s⟩‖ψ_r‖‖ψ_s‖) ≤ m‖Ψ‖_F [‖ΨΨᵀ‖_F² − ‖Ψ‖_F⁴/m]^{1/4}`.
///
/// The bracket is evaluated exactly in integers before the fourth root.
pub fn phi_fact_sides(snap: &ActivationSnapshot) -> Result<(f64, f64)> {
    let ones = snap.psi.ones();
    if ones == 0 {
        return Err(Error::DegenerateMatrix);
    }
    let m = snap.m() as u128;
    let g2 = gram_frobenius_sq(&snap.psi);
    let f2 = u128::from(ones) * u128::from(ones);
    let bracket = (m * g2 - f2) as f64 / m as f64;
    let rhs = m as f64 * (ones as f64).sqrt() * bracket.sqrt().sqrt();
    Ok((column_pair_sum(&snap.psi), rhs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize, m: usize) -> BinaryMatrix {
        BinaryMatrix::from_fn(n, m, |_, _| true)
    }

    fn eye_pad(n: usize, m: usize) -> BinaryMatrix {
        BinaryMatrix::from_fn(n, m, |i, j| i == j)
    }

    #[test]
    fn activation_examples() {
        let x = RealMatrix::identity(3);
        let psi = activation_matrix(&x, &x).unwrap();
        assert!((0..3).all(|i| psi.get(i, i)));
        // Off-diagonal pre-activations are exactly 0 and count as active.
        assert_eq!(psi.ones(), 9);

        let w = RealMatrix::new(3, 1, vec![-1.0, 0.0, 0.0]).unwrap();
        let psi = activation_matrix(&w, &x).unwrap();
        assert!(!psi.get(0, 0));

        let bad = RealMatrix::zeros(2, 1);
        assert!(matches!(activation_matrix(&bad, &x), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn bits_cross_word_boundaries() {
        let mut b = BinaryMatrix::zeros(2, 130);
        b.set(1, 129, true);
        b.set(0, 64, true);
        b.set(0, 63, true);
        assert!(b.get(1, 129) && b.get(0, 64) && b.get(0, 63) && !b.get(1, 128));
        assert_eq!(b.ones(), 3);
        b.set(0, 63, false);
        assert_eq!(b.row_count(0), 1);
        assert_eq!(b.transpose().transpose(), b);
    }

    #[test]
    fn snapshot_examples() {
        let s = ActivationSnapshot::from_psi(ones(2, 3), 0);
        assert_eq!(s.frob_sq, 6.0);
        assert!((s.sigma_max - 6f64.sqrt()).abs() < 1e-12);
        assert!(s.sigma_min.abs() < 1e-7);

        let s = ActivationSnapshot::from_psi(eye_pad(3, 5), 4);
        assert!((s.sigma_min - 1.0).abs() < 1e-14 && (s.sigma_max - 1.0).abs() < 1e-14);
        assert_eq!(s.row_norm_sq, vec![1.0; 3]);

        let tall = ActivationSnapshot::from_psi(ones(4, 2), 0);
        assert_eq!(tall.sigma_min, 0.0);
    }

    #[test]
    fn snapshot_text_round_trip() {
        let psi = BinaryMatrix::from_fn(5, 70, |i, j| (i * 7 + j * 3) % 5 < 2);
        let s = ActivationSnapshot::from_psi(psi, 12);
        assert_eq!(ActivationSnapshot::from_text(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn perturbation_examples() {
        let w = RealMatrix::from_fn(3, 4, |i, j| (i as f64 - 1.0) * (j as f64 + 0.5));
        let x = RealMatrix::identity(3);
        let s = snapshot(&w, &x, 0).unwrap();
        let rep = perturbation(&s, &s, &w, &w).unwrap();
        assert_eq!(rep.frob_sq_delta, 0.0);
        assert_eq!(rep.spectral_delta, 0.0);
        assert_eq!(rep.max_weight_drift, 0.0);

        let mut flipped = s.psi.clone();
        flipped.set(1, 2, !flipped.get(1, 2));
        let now = ActivationSnapshot::from_psi(flipped, 1);
        let rep = perturbation(&now, &s, &w, &w).unwrap();
        assert_eq!(rep.frob_sq_delta, 1.0);
        assert!((rep.spectral_delta - 1.0).abs() < 1e-14);
        assert_eq!(rep.row_flip_counts, vec![0, 1, 0]);
    }

    #[test]
    fn flip_set_examples() {
        let x = RealMatrix::identity(2);
        let w0 = RealMatrix::from_rows(&[vec![0.3, -0.05], vec![0.2, 1.0]]).unwrap();
        let sets = flip_candidate_sets(&w0, &x, 0.3).unwrap();
        // |w_0ᵀx_0| = 0.3 exactly: the band is closed.
        assert!(sets.candidate.get(0, 0));
        assert!(sets.candidate.get(0, 1));
        assert!(!sets.candidate.get(1, 1));
        assert_eq!(sets.candidate_counts, vec![2, 1]);
        let tiny = flip_candidate_sets(&w0, &x, 1e-12).unwrap();
        assert_eq!(tiny.candidate.ones(), 0);
        assert!(flip_candidate_sets(&w0, &x, 0.0).is_err());
    }

    #[test]
    fn recommended_radius_examples() {
        let r = r_recommended(0.25, FRAC_PI_2, 4, 2.0).unwrap();
        assert!((r.r - (PI / 64.0).sqrt()).abs() < 1e-15);
        assert!(!r.outside_band);
        let r = r_recommended(0.5, FRAC_PI_2, 1, 1e-12).unwrap();
        assert!((r.r - 0.886).abs() < 1e-3 && r.outside_band);
        assert!(r_recommended(0.25, 0.0, 4, 2.0).is_err());
        assert!(r_recommended(0.25, 1.6, 4, 2.0).is_err());
        assert!(r_recommended(0.25, 1.0, 1_000_000, 2.0).unwrap().r < 1e-3);
    }

    #[test]
    fn row_gram_examples() {
        let s = ActivationSnapshot::from_psi(BinaryMatrix::from_fn(3, 6, |i, j| j / 2 == i), 0);
        let dec = row_gram_decomposition(&s).unwrap();
        assert_eq!(dec.upsilon_lambda_min, 0.0);
        assert_eq!(dec.bound, 2.0);
        assert!((dec.bound - s.sigma_min * s.sigma_min).abs() < 1e-12);

        let dec = row_gram_decomposition(&ActivationSnapshot::from_psi(ones(2, 2), 0)).unwrap();
        assert_eq!(dec.diag_min, 2.0);
        assert!((dec.upsilon_lambda_min + 2.0).abs() < 1e-14);
        assert!(dec.bound.abs() < 1e-14);

        let wide = ActivationSnapshot::from_psi(ones(3, 2), 0);
        assert!(matches!(row_gram_decomposition(&wide), Err(Error::WideMatrixRequired { .. })));
    }

    #[test]
    fn phi_fact_examples() {
        // All-ones 2×3: six ordered pairs, each √(2·√2·√2) = 2.
        let (lhs, rhs) = phi_fact_sides(&ActivationSnapshot::from_psi(ones(2, 3), 0)).unwrap();
        assert!((lhs - 12.0).abs() < 1e-12);
        // ‖ΨΨᵀ‖_F² = 4·9 = 36, ‖Ψ‖_F⁴/m = 36/3 = 12, rhs = 3·√6·24^{1/4}.
        assert!((rhs - 3.0 * 6f64.sqrt() * 24f64.powf(0.25)).abs() < 1e-12);
        assert!(lhs < rhs);

        let (lhs, rhs) = phi_fact_sides(&ActivationSnapshot::from_psi(eye_pad(3, 5), 0)).unwrap();
        assert_eq!(lhs, 0.0);
        assert!(rhs > 0.0);

        let (lhs, rhs) = phi_fact_sides(&ActivationSnapshot::from_psi(ones(3, 1), 0)).unwrap();
        assert_eq!((lhs, rhs), (0.0, 0.0));

        let zero = ActivationSnapshot::from_psi(BinaryMatrix::zeros(2, 3), 0);
        assert!(matches!(phi_fact_sides(&zero), Err(Error::DegenerateMatrix)));
    }

    #[test]
    fn pair_sum_matches_direct_evaluation() {
        for (n, m) in [(5, 9), (70, 6)] {
            let psi = BinaryMatrix::from_fn(n, m, |i, j| (i * 5 + j * j + i * j) % 4 != 0);
            let mut want = 0.0;
            for r in 0..m {
                for s in 0..m {
                    if r != s {
                        let (mut o, mut cr, mut cs) = (0.0, 0.0, 0.0);
                        for i in 0..n {
                            let (a, b) = (psi.get(i, r) as u8 as f64, psi.get(i, s) as u8 as f64);
                            o += a * b;
                            cr += a;
                            cs += b;
                        }
                        want += (o * cr.sqrt() * cs.sqrt()).sqrt();
                    }
                }
            }
            assert!((column_pair_sum(&psi) - want).abs() < 1e-10 * want);
        }
    }

    #[test]
    fn gram_frobenius_identity() {
        let psi = BinaryMatrix::from_fn(7, 11, |i, j| (i * j + i) % 3 == 0);
        let rows = psi.row_gram_counts();
        let cols = psi.transpose().row_gram_counts();
        let f = |v: &[u64]| v.iter().map(|&c| u128::from(c * c)).sum::<u128>();
        assert_eq!(f(&rows), f(&cols));
        assert_eq!(gram_frobenius_sq(&psi), f(&rows));
    }
}
