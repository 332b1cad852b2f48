//! Seed derivation and Haar-random sampling.
//!
//! Every random draw in the crate comes from a [`GateRng`] seeded by
//! [`derive_seed`] from a master seed and an index path such as
//! `(trial, step, party)`. Streams never depend on which thread evaluates
//! them.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, dot_conj, CMatrix};

pub type GateRng = ChaCha8Rng;

/// Party tags used as the last component of a seed path.
pub mod party {
    pub const A: u64 = 0;
    pub const B: u64 = 1;
    pub const GATE: u64 = 2;
    pub const STATE: u64 = 3;
}

/// Matrices at least this large are orthogonalized with faer's Householder QR.
const HOUSEHOLDER_FROM: usize = 64;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a master seed with an index path into a 64-bit sub-seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x5851_F42D_4C95_7F2D))))
}

pub fn rng_from(master: u64, path: &[u64]) -> GateRng {
    GateRng::seed_from_u64(derive_seed(master, path))
}

/// Standard complex Gaussian with `E|z|^2 = 1`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-random unitary of order `d`: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    assert!(d >= 1, "unitary order must be positive");
    // column-major draws so both QR paths see the same Gaussian matrix
    let mut cols: Vec<Vec<c64>> = (0..d)
        .map(|_| (0..d).map(|_| complex_gaussian(rng)).collect())
        .collect();
    if d >= HOUSEHOLDER_FROM {
        return householder_haar(&cols);
    }
    // Modified Gram-Schmidt leaves a positive real diagonal in R, which is
    // exactly the phase convention Haar measure needs.
    for j in 0..d {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for q in done.iter() {
            let proj = dot_conj(v, q);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    CMatrix::from_fn(d, d, |r, c| cols[c][r])
}

fn householder_haar(cols: &[Vec<c64>]) -> CMatrix {
    let d = cols.len();
    let z = Mat::from_fn(d, d, |r, c| cols[c][r]);
    let qr = z.qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let phases: Vec<c64> = (0..d)
        .map(|k| {
            let rk = r[(k, k)];
            if rk.norm() > 0.0 {
                rk / rk.norm()
            } else {
                c64::new(1.0, 0.0)
            }
        })
        .collect();
    CMatrix::from_fn(d, d, |row, c| q[(row, c)] * phases[c])
}

/// Haar-random pure state in dimension `d`.
pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<c64> {
    let mut v: Vec<c64> = (0..d).map(|_| complex_gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_is_unitary_on_both_paths() {
        let mut rng = rng_from(11, &[]);
        for d in [1, 2, 3, 9, 70] {
            let u = haar_unitary(d, &mut rng);
            assert!(u.is_unitary(1e-10), "d={d}: {}", u.unitarity_deviation());
        }
    }

    #[test]
    fn same_seed_gives_identical_matrix() {
        let a = haar_unitary(5, &mut rng_from(42, &[1, 2]));
        let b = haar_unitary(5, &mut rng_from(42, &[1, 2]));
        assert_eq!(a, b);
        let c = haar_unitary(5, &mut rng_from(42, &[1, 3]));
        assert_ne!(a, c);
    }

    #[test]
    fn derived_seeds_separate_paths() {
        let s = derive_seed(7, &[0, 1]);
        assert_ne!(s, derive_seed(7, &[1, 0]));
        assert_ne!(s, derive_seed(8, &[0, 1]));
        assert_ne!(derive_seed(7, &[]), derive_seed(7, &[0]));
    }

    #[test]
    fn first_moment_of_trace_vanishes_and_form_factor_is_one() {
        let n = 20_000;
        let (mut sum, mut sum_abs2) = (c64::new(0.0, 0.0), 0.0);
        for k in 0..n {
            let u = haar_unitary(3, &mut rng_from(5, &[k]));
            let t = u.trace();
            sum += t;
            sum_abs2 += t.norm_sqr();
        }
        assert!((sum / n as f64).norm() < 0.03);
        // E|tr u|^2 = 1, Var(|tr u|^2) = 1 for d >= 2
        assert!((sum_abs2 / n as f64 - 1.0).abs() < 4.0 / (n as f64).sqrt() * 1.5);
    }

    #[test]
    fn haar_state_is_normalized() {
        let v = haar_state(6, &mut rng_from(3, &[]));
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-14);
    }
}
