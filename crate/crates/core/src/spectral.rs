//! Dense real linear algebra: norms, symmetric eigenvalues, extreme singular
//! values, and the Geršgorin and Weyl inequalities.
//!
//! Eigenvalues come from `nalgebra`'s symmetric QR iteration; everything the
//! rest of the crate needs is routed through [`symmetric_spectrum`] and
//! [`singular_extremes`].

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::check::BoundCheck;
use crate::{Error, Result};

/// Default absolute tolerance for the symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    /// Builds a matrix from row-major entries, rejecting empty shapes and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(RealMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix shape");
        RealMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidMatrix("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn matmul(&self, other: &RealMatrix) -> RealMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = RealMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `Mᵀ N` without materializing the transpose.
    pub fn transpose_matmul(&self, other: &RealMatrix) -> RealMatrix {
        assert_eq!(self.rows, other.rows, "row counts differ");
        let mut out = RealMatrix::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let right = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(right) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Row Gram matrix `M Mᵀ`.
    pub fn row_gram(&self) -> RealMatrix {
        let n = self.rows;
        let mut g = RealMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// Column Gram matrix `Mᵀ M`.
    pub fn col_gram(&self) -> RealMatrix {
        self.transpose_matmul(self)
    }

    pub fn sub(&self, other: &RealMatrix) -> Result<RealMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scaled(&self, c: f64) -> RealMatrix {
        RealMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &RealMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues of a symmetric matrix, sorted non-increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSpectrum {
    pub eigenvalues: Vec<f64>,
    pub dimension: usize,
}

impl SymmetricSpectrum {
    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[self.dimension - 1]
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }
}

pub fn frobenius_norm(m: &RealMatrix) -> f64 {
    m.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn symmetrized(s: &RealMatrix, tol: f64) -> Result<RealMatrix> {
    if !s.is_square() {
        return Err(Error::NonSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    let n = s.rows();
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    if asym > tol {
        return Err(Error::NonSymmetric { asymmetry: asym });
    }
    Ok(RealMatrix::from_fn(n, n, |i, j| 0.5 * (s[(i, j)] + s[(j, i)])))
}

/// Full eigendecomposition `S = Q diag(λ) Qᵀ`; eigenvalues sorted
/// non-increasing with the columns of `Q` permuted to match.
pub fn symmetric_eigen(s: &RealMatrix, tol: f64) -> Result<(SymmetricSpectrum, RealMatrix)> {
    let sym = symmetrized(s, tol)?;
    let n = sym.rows();
    let eig = nalgebra::SymmetricEigen::new(sym.to_nalgebra());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let q = RealMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((
        SymmetricSpectrum {
            eigenvalues,
            dimension: n,
        },
        q,
    ))
}

/// Eigenvalues of a symmetric matrix. The input is symmetrized as
/// `(S + Sᵀ)/2` once it passes the `tol` check.
pub fn symmetric_spectrum(s: &RealMatrix, tol: f64) -> Result<SymmetricSpectrum> {
    symmetric_eigen(s, tol).map(|(spec, _)| spec)
}

/// Extreme eigenvalues `(λ_min, λ_max)` of a symmetric matrix that is known
/// to be exactly symmetric (Gram matrices built by this crate).
pub(crate) fn gram_extremes(g: &RealMatrix) -> (f64, f64) {
    let spec = symmetric_spectrum(g, f64::INFINITY).expect("gram matrices are square");
    (spec.min(), spec.max())
}

/// Smallest and largest singular values.
///
/// Works through the smaller of the two Gram matrices, so a wide `n×m`
/// matrix costs one `n×n` eigenproblem.
pub fn singular_extremes(m: &RealMatrix) -> (f64, f64) {
    let gram = if m.rows() <= m.cols() {
        m.row_gram()
    } else {
        m.col_gram()
    };
    let (lo, hi) = gram_extremes(&gram);
    (lo.max(0.0).sqrt(), hi.max(0.0).sqrt())
}

/// Spectral norm `‖M‖₂`.
pub fn spectral_norm(m: &RealMatrix) -> f64 {
    singular_extremes(m).1
}

/// Geršgorin bracket `(min_i (S_ii - R_i), max_i (S_ii + R_i))` with
/// `R_i = Σ_{j≠i} |S_ij|`.
pub fn gershgorin_envelope(s: &RealMatrix) -> Result<(f64, f64)> {
    if !s.is_square() {
        return Err(Error::NonSquare {
            rows: s.rows(),
            cols: s.cols(),
        });
    }
    let n = s.rows();
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    for i in 0..n {
        let radius: f64 = (0..n).filter(|&j| j != i).map(|j| s[(i, j)].abs()).sum();
        lower = lower.min(s[(i, i)] - radius);
        upper = upper.max(s[(i, i)] + radius);
    }
    Ok((lower, upper))
}

/// Weyl's inequality `σ_min(A) ≥ σ_min(B) − ‖A − B‖₂`.
pub fn weyl_singular_lower(a: &RealMatrix, b: &RealMatrix) -> Result<BoundCheck> {
    let diff = a.sub(b)?;
    let lhs = singular_extremes(a).0;
    let rhs = singular_extremes(b).0 - spectral_norm(&diff);
    Ok(BoundCheck::lower("weyl_singular_lower", lhs, rhs))
}
