//! Dense complex matrices.
//!
//! Small operators (the two-qubit and qubit-qutrit workloads that dominate the
//! Monte-Carlo loops) go through plain row-major loops. Products above
//! [`FAER_THRESHOLD`] multiply-adds and every decomposition are delegated to
//! `faer`.

use std::ops::{Index, IndexMut};

use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

pub use faer::c64;

/// Work (rows × inner × cols) above which products are handed to faer.
const FAER_THRESHOLD: usize = 48 * 48 * 48;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<c64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m.data[i * d + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> c64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<c64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Builds a matrix from real rows, mainly for permutation-style gates.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| c64::new(rows[i][j], 0.0))
    }

    pub fn diagonal(entries: &[c64]) -> Self {
        let d = entries.len();
        let mut m = Self::zeros(d, d);
        for (i, &z) in entries.iter().enumerate() {
            m.data[i * d + i] = z;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[c64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [c64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[c64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: c64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn trace(&self) -> c64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        if self.rows * self.cols * rhs.cols > FAER_THRESHOLD {
            let prod = self.to_faer() * rhs.to_faer();
            return Self::from_faer(prod.as_ref());
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for i in 0..self.rows {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `A A^dagger`.
    pub fn gram(&self) -> Self {
        if self.rows * self.rows * self.cols > FAER_THRESHOLD {
            let a = self.to_faer();
            let prod = &a * a.adjoint();
            return Self::from_faer(prod.as_ref());
        }
        let d = self.rows;
        let mut out = Self::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let z = dot_conj(self.row(a), self.row(b));
                out.data[a * d + b] = z;
                out.data[b * d + a] = z.conj();
            }
        }
        out
    }

    /// `tr[(A A^dagger)^2]`, computed through whichever Gram matrix is smaller.
    pub fn gram_purity(&self) -> f64 {
        if self.rows <= self.cols {
            self.gram().frobenius_norm_sqr()
        } else {
            self.adjoint().gram().frobenius_norm_sqr()
        }
    }

    /// Largest entry modulus of `A^dagger A - 1`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let g = self.adjoint().gram();
        let d = self.rows;
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((g[(r, c)] - target).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() < tol
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        let (r2, c2) = (rhs.rows, rhs.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |r, c| {
            self[(r / r2, c / c2)] * rhs[(r % r2, c % c2)]
        })
    }

    pub fn to_faer(&self) -> Mat<c64> {
        Mat::from_fn(self.rows, self.cols, |r, c| self.data[r * self.cols + c])
    }

    pub fn from_faer(m: MatRef<'_, c64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
    }

    /// Singular values in nonincreasing order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        self.to_faer()
            .singular_values()
            .map_err(|e| Error::numerical(format!("SVD failed: {e:?}")))
    }

    /// Eigenvalues of a general square matrix, in solver order.
    pub fn eigenvalues(&self) -> Result<Vec<c64>> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
        }
        self.to_faer()
            .eigenvalues()
            .map_err(|e| Error::numerical(format!("eigensolver failed: {e:?}")))
    }

    /// Eigenvalues of a Hermitian matrix in nondecreasing order. Only the
    /// lower triangle is read.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("eigenvalues of a non-square matrix".into()));
        }
        self.to_faer()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::numerical(format!("Hermitian eigensolver failed: {e:?}")))
    }

    /// `exp(i H)` for Hermitian `H`, via its spectral decomposition.
    pub fn exp_i_hermitian(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("exponential of a non-square matrix".into()));
        }
        let evd = self
            .to_faer()
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::numerical(format!("Hermitian eigensolver failed: {e:?}")))?;
        let vecs = evd.U();
        let vals = evd.S().column_vector();
        let d = self.rows;
        let phases: Vec<c64> = (0..d).map(|k| c64::from_polar(1.0, vals[k].re)).collect();
        Ok(Self::from_fn(d, d, |r, c| {
            (0..d).map(|k| vecs[(r, k)] * phases[k] * vecs[(c, k)].conj()).sum()
        }))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = c64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &c64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut c64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// `sum_k a_k conj(b_k)`.
#[inline]
pub fn dot_conj(a: &[c64], b: &[c64]) -> c64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.im * y.re - x.re * y.im;
    }
    c64::new(re, im)
}
