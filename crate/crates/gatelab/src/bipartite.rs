//! Bipartite operators and their index permutations.
//!
//! The composite basis index is row-major: `|i α⟩` with `0 <= i < n`,
//! `0 <= α < m` sits at position `i*m + α`. Reshuffling, partial
//! transposition and the matrix file format all use this convention.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix, ONE, ZERO};

/// Unitarity tolerance (max entry of `U^dagger U - 1`).
pub const UNITARY_TOL: f64 = 1e-10;

/// Spectral values above `-SPECTRUM_CLIP` are treated as round-off and
/// clipped to zero.
pub const SPECTRUM_CLIP: f64 = 1e-12;

/// Subsystem dimensions `(n, m)` of `H_A ⊗ H_B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct Dims {
    n: usize,
    m: usize,
}

impl Dims {
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n < 2 || m < 2 {
            return Err(Error::invalid(format!(
                "subsystem dimensions must be at least 2, got {n}x{m}"
            )));
        }
        Ok(Dims { n, m })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    #[inline]
    pub fn n(self) -> usize {
        self.n
    }

    #[inline]
    pub fn m(self) -> usize {
        self.m
    }

    #[inline]
    pub fn total(self) -> usize {
        self.n * self.m
    }

    pub fn is_square(self) -> bool {
        self.n == self.m
    }
}

impl TryFrom<[usize; 2]> for Dims {
    type Error = Error;

    fn try_from(v: [usize; 2]) -> Result<Self> {
        Dims::new(v[0], v[1])
    }
}

impl From<Dims> for [usize; 2] {
    fn from(d: Dims) -> Self {
        [d.n, d.m]
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.n, self.m)
    }
}

impl FromStr for Dims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| Error::invalid(format!("dims must look like NxM, got {s:?}")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("dims must look like NxM, got {s:?}")))
        };
        Dims::new(parse(a)?, parse(b)?)
    }
}

/// Square complex matrix of order `n*m` acting on `H_A ⊗ H_B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteOperator {
    dims: Dims,
    mat: CMatrix,
}

impl BipartiteOperator {
    pub fn new(dims: Dims, mat: CMatrix) -> Result<Self> {
        let d = dims.total();
        if mat.rows() != d || mat.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "a {}x{} matrix cannot act on {dims} (order {d})",
                mat.rows(),
                mat.cols()
            )));
        }
        Ok(BipartiteOperator { dims, mat })
    }

    /// Like [`BipartiteOperator::new`], additionally enforcing unitarity to
    /// [`UNITARY_TOL`].
    pub fn unitary(dims: Dims, mat: CMatrix) -> Result<Self> {
        let op = Self::new(dims, mat)?;
        op.check_unitary()?;
        Ok(op)
    }

    /// `u_A ⊗ u_B`.
    pub fn local(ua: &CMatrix, ub: &CMatrix) -> Result<Self> {
        if !ua.is_square() || !ub.is_square() {
            return Err(Error::DimensionMismatch("local factors must be square".into()));
        }
        Self::new(Dims::new(ua.rows(), ub.rows())?, ua.kron(ub))
    }

    pub fn identity(dims: Dims) -> Self {
        BipartiteOperator {
            dims,
            mat: CMatrix::identity(dims.total()),
        }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn unitarity_deviation(&self) -> f64 {
        self.mat.unitarity_deviation()
    }

    pub fn check_unitary(&self) -> Result<()> {
        let deviation = self.unitarity_deviation();
        // NaN must fail too
        if deviation < UNITARY_TOL {
            Ok(())
        } else {
            Err(Error::NotUnitary { deviation })
        }
    }

    pub fn adjoint(&self) -> Self {
        BipartiteOperator {
            dims: self.dims,
            mat: self.mat.adjoint(),
        }
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.dims != rhs.dims {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {} with {}",
                self.dims, rhs.dims
            )));
        }
        Ok(BipartiteOperator {
            dims: self.dims,
            mat: self.mat.matmul(&rhs.mat),
        })
    }

    pub fn scale(&self, s: c64) -> Self {
        BipartiteOperator {
            dims: self.dims,
            mat: self.mat.scale(s),
        }
    }

    /// `(u_A ⊗ u_B) · self` without forming the Kronecker product.
    pub fn apply_local_left(&self, ua: &CMatrix, ub: &CMatrix) -> Self {
        let (n, m) = (self.dims.n, self.dims.m);
        assert!(ua.rows() == n && ua.cols() == n && ub.rows() == m && ub.cols() == m);
        let d = n * m;
        let src = self.mat.data();
        // act with u_B on the α index of every row block
        let mut tmp = vec![ZERO; d * d];
        for j in 0..n {
            for alpha in 0..m {
                let out = &mut tmp[(j * m + alpha) * d..(j * m + alpha + 1) * d];
                for beta in 0..m {
                    let w = ub[(alpha, beta)];
                    let row = &src[(j * m + beta) * d..(j * m + beta + 1) * d];
                    for (o, x) in out.iter_mut().zip(row) {
                        *o += w * x;
                    }
                }
            }
        }
        // then with u_A on the i index
        let mut dst = vec![ZERO; d * d];
        for i in 0..n {
            for j in 0..n {
                let w = ua[(i, j)];
                for alpha in 0..m {
                    let out = &mut dst[(i * m + alpha) * d..(i * m + alpha + 1) * d];
                    let row = &tmp[(j * m + alpha) * d..(j * m + alpha + 1) * d];
                    for (o, x) in out.iter_mut().zip(row) {
                        *o += w * x;
                    }
                }
            }
        }
        BipartiteOperator {
            dims: self.dims,
            mat: CMatrix::from_vec(d, d, dst).expect("order preserved"),
        }
    }
}

/// Realignment `U^R` with `U^R[(i,j),(α,β)] = ⟨iα|U|jβ⟩`, an `n² x m²`
/// matrix.
pub fn reshuffle(op: &BipartiteOperator) -> CMatrix {
    let (n, m) = (op.dims.n, op.dims.m);
    let u = &op.mat;
    let mut r = CMatrix::zeros(n * n, m * m);
    for i in 0..n {
        for alpha in 0..m {
            for j in 0..n {
                for beta in 0..m {
                    r[(i * n + j, alpha * m + beta)] = u[(i * m + alpha, j * m + beta)];
                }
            }
        }
    }
    r
}

/// Partial transpose on the first factor:
/// `⟨jα|U^{T_A}|iβ⟩ = ⟨iα|U|jβ⟩`.
pub fn partial_transpose(op: &BipartiteOperator) -> BipartiteOperator {
    let (n, m) = (op.dims.n, op.dims.m);
    let d = n * m;
    let u = &op.mat;
    let mut t = CMatrix::zeros(d, d);
    for i in 0..n {
        for alpha in 0..m {
            for j in 0..n {
                for beta in 0..m {
                    t[(j * m + alpha, i * m + beta)] = u[(i * m + alpha, j * m + beta)];
                }
            }
        }
    }
    BipartiteOperator { dims: op.dims, mat: t }
}

/// SWAP on `C^n ⊗ C^n`.
pub fn swap_operator(n: usize) -> Result<BipartiteOperator> {
    let dims = Dims::square(n)?;
    let mut s = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            s[(j * n + i, i * n + j)] = ONE;
        }
    }
    Ok(BipartiteOperator { dims, mat: s })
}

/// Operator-Schmidt coefficients `λ_j`: squared singular values of `U^R`,
/// nonincreasing, zero-padded to length `n²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchmidtSpectrum {
    pub values: Vec<f64>,
}

impl SchmidtSpectrum {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Number of coefficients above `tol` (relative to the largest one).
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.values.first().copied().unwrap_or(0.0);
        self.values.iter().filter(|&&v| v > tol * top).count()
    }
}

pub fn schmidt_spectrum(op: &BipartiteOperator) -> Result<SchmidtSpectrum> {
    let n = op.dims.n;
    let sv = reshuffle(op).singular_values()?;
    let mut values: Vec<f64> = sv.into_iter().map(|s| s * s).collect();
    values.resize(n * n, 0.0);
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(SchmidtSpectrum { values })
}

fn normalized_gram(a: &CMatrix, dims: Dims) -> Result<CMatrix> {
    let nm = dims.total() as f64;
    let rho = a.gram().scale(c64::new(1.0 / nm, 0.0));
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-10 {
        return Err(Error::NotUnitary {
            deviation: (tr - 1.0).abs(),
        });
    }
    Ok(rho)
}

/// `ρ_R = U^R U^R† / (nm)`, order `n²`.
pub fn density_r(op: &BipartiteOperator) -> Result<CMatrix> {
    normalized_gram(&reshuffle(op), op.dims)
}

/// `ρ_T = U^{T_A} U^{T_A}† / (nm)`, order `nm`.
pub fn density_t(op: &BipartiteOperator) -> Result<CMatrix> {
    normalized_gram(partial_transpose(op).matrix(), op.dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{haar_unitary, rng_from};

    fn haar_op(dims: Dims, seed: u64) -> BipartiteOperator {
        BipartiteOperator::unitary(dims, haar_unitary(dims.total(), &mut rng_from(seed, &[]))).unwrap()
    }

    #[test]
    fn dims_parse_and_display() {
        let d: Dims = "2x3".parse().unwrap();
        assert_eq!((d.n(), d.m()), (2, 3));
        assert_eq!(d.to_string(), "2x3");
        assert!("1x3".parse::<Dims>().is_err());
        assert!("23".parse::<Dims>().is_err());
    }

    #[test]
    fn mismatched_order_is_rejected() {
        let dims = Dims::new(2, 3).unwrap();
        assert!(matches!(
            BipartiteOperator::new(dims, CMatrix::identity(4)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn non_unitary_is_rejected() {
        let dims = Dims::square(2).unwrap();
        let m = CMatrix::identity(4).scale(c64::new(1.1, 0.0));
        assert!(matches!(BipartiteOperator::unitary(dims, m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn swap_two_qubits() {
        let s = swap_operator(2).unwrap();
        let expected = CMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        assert_eq!(s.matrix(), &expected);
        assert!(swap_operator(1).is_err());
    }

    #[test]
    fn swap_is_an_involution() {
        for n in 2..=5 {
            let s = swap_operator(n).unwrap();
            assert_eq!(s.compose(&s).unwrap(), BipartiteOperator::identity(s.dims()));
        }
    }

    #[test]
    fn swap_reshuffles_to_itself() {
        for n in 2..=4 {
            let s = swap_operator(n).unwrap();
            assert_eq!(&reshuffle(&s), s.matrix());
        }
    }

    #[test]
    fn identity_reshuffles_to_rank_one() {
        let id = BipartiteOperator::identity(Dims::square(2).unwrap());
        let sv = reshuffle(&id).singular_values().unwrap();
        assert!((sv[0] - 2.0).abs() < 1e-12);
        assert!(sv[1..].iter().all(|&s| s < 1e-12));
    }

    #[test]
    fn reshuffle_twice_is_identity_for_square_dims() {
        let u = haar_op(Dims::square(3).unwrap(), 1);
        let r = BipartiteOperator::new(u.dims(), reshuffle(&u)).unwrap();
        assert_eq!(&reshuffle(&r), u.matrix());
    }

    #[test]
    fn partial_transpose_twice_is_identity() {
        let u = haar_op(Dims::new(2, 3).unwrap(), 2);
        assert_eq!(partial_transpose(&partial_transpose(&u)), u);
    }

    #[test]
    fn partial_transpose_of_diagonal_is_unchanged() {
        let dims = Dims::new(2, 3).unwrap();
        let diag: Vec<c64> = (0..6).map(|k| c64::from_polar(1.0, k as f64)).collect();
        let d = BipartiteOperator::new(dims, CMatrix::diagonal(&diag)).unwrap();
        assert_eq!(partial_transpose(&d), d);
    }

    #[test]
    fn partial_transpose_of_local_transposes_first_factor() {
        let mut rng = rng_from(3, &[]);
        let ua = haar_unitary(2, &mut rng);
        let ub = haar_unitary(3, &mut rng);
        let local = BipartiteOperator::local(&ua, &ub).unwrap();
        let expected = BipartiteOperator::local(&ua.transpose(), &ub).unwrap();
        assert!(partial_transpose(&local).matrix().max_abs_diff(expected.matrix()) < 1e-15);
    }

    #[test]
    fn reshuffle_preserves_frobenius_norm() {
        let u = haar_op(Dims::new(2, 3).unwrap(), 4);
        let a = reshuffle(&u).frobenius_norm_sqr();
        assert!((a - u.matrix().frobenius_norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn apply_local_left_matches_kron_product() {
        let dims = Dims::new(3, 2).unwrap();
        let u = haar_op(dims, 5);
        let mut rng = rng_from(6, &[]);
        let ua = haar_unitary(3, &mut rng);
        let ub = haar_unitary(2, &mut rng);
        let fast = u.apply_local_left(&ua, &ub);
        let slow = BipartiteOperator::local(&ua, &ub).unwrap().compose(&u).unwrap();
        assert!(fast.matrix().max_abs_diff(slow.matrix()) < 1e-14);
    }

    #[test]
    fn schmidt_spectra() {
        let s = schmidt_spectrum(&swap_operator(2).unwrap()).unwrap();
        for v in &s.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let mut rng = rng_from(7, &[]);
        let local = BipartiteOperator::local(&haar_unitary(3, &mut rng), &haar_unitary(3, &mut rng)).unwrap();
        let s = schmidt_spectrum(&local).unwrap();
        assert!((s.values[0] - 9.0).abs() < 1e-10);
        assert!(s.values[1..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn schmidt_spectrum_is_padded_when_b_is_larger() {
        let u = haar_op(Dims::new(2, 3).unwrap(), 8);
        let s = schmidt_spectrum(&u).unwrap();
        assert_eq!(s.values.len(), 4);
        assert!((s.sum() - 6.0).abs() < 1e-8 * 6.0);
        let u = haar_op(Dims::new(3, 2).unwrap(), 9);
        let s = schmidt_spectrum(&u).unwrap();
        assert_eq!(s.values.len(), 9);
        assert!(s.values[4..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn density_of_swap_is_maximally_mixed() {
        let rho = density_r(&swap_operator(3).unwrap()).unwrap();
        let target = CMatrix::identity(9).scale(c64::new(1.0 / 9.0, 0.0));
        assert!(rho.max_abs_diff(&target) < 1e-15);
    }

    #[test]
    fn density_of_non_unitary_is_flagged() {
        let dims = Dims::square(2).unwrap();
        let op = BipartiteOperator::new(dims, CMatrix::identity(4).scale(c64::new(2.0, 0.0))).unwrap();
        assert!(density_r(&op).is_err());
        assert!(density_t(&op).is_err());
    }

    #[test]
    fn densities_are_states() {
        for dims in [Dims::new(2, 2).unwrap(), Dims::new(2, 3).unwrap(), Dims::new(3, 2).unwrap()] {
            let u = haar_op(dims, 10 + dims.total() as u64);
            for rho in [density_r(&u).unwrap(), density_t(&u).unwrap()] {
                assert!((rho.trace().re - 1.0).abs() < 1e-10);
                assert!(rho.max_abs_diff(&rho.adjoint()) < 1e-14);
                for ev in rho.hermitian_eigenvalues().unwrap() {
                    assert!((-SPECTRUM_CLIP..=1.0 + 1e-12).contains(&ev), "{ev}");
                }
            }
        }
    }
}
