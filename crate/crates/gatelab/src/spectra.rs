//! Spectra of reshuffled and partially transposed operators against
//! random-matrix reference laws.
//!
//! Eigenvalues are reported without rescaling: for a Haar unitary of order
//! `N²` the entries of `U^R` have variance `1/N²`, which already places the
//! circular law on the unit disk. Squared singular values are scaled by the
//! order of the density matrix so that their mean is 1, the normalization of
//! the Marčenko-Pastur law with unit aspect ratio.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bipartite::{partial_transpose, reshuffle, BipartiteOperator};
use crate::error::{Error, Result};
use crate::exec::{Estimate, Exec};
use crate::linalg::{c64, CMatrix};
use crate::random::{haar_unitary, rng_from};

/// Negative scaled singular values above this are round-off and set to 0.
const ROUNDOFF: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralKind {
    Reshuffled,
    PartialTranspose,
}

impl SpectralKind {
    pub const BOTH: [SpectralKind; 2] = [SpectralKind::Reshuffled, SpectralKind::PartialTranspose];

    pub fn as_str(self) -> &'static str {
        match self {
            SpectralKind::Reshuffled => "reshuffled",
            SpectralKind::PartialTranspose => "partial-transpose",
        }
    }
}

impl fmt::Display for SpectralKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SpectralKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reshuffled" | "R" => Ok(SpectralKind::Reshuffled),
            "partial-transpose" | "T" => Ok(SpectralKind::PartialTranspose),
            _ => Err(Error::invalid(format!(
                "spectral kind must be reshuffled or partial-transpose, got {s:?}"
            ))),
        }
    }
}

/// `U^R` (square only when `n = m`) or `U^{T_A}`.
pub fn target_matrix(op: &BipartiteOperator, kind: SpectralKind) -> Result<CMatrix> {
    match kind {
        SpectralKind::Reshuffled if !op.dims().is_square() => Err(Error::DimensionMismatch(format!(
            "the reshuffled matrix of a {} operator is not square",
            op.dims()
        ))),
        SpectralKind::Reshuffled => Ok(reshuffle(op)),
        SpectralKind::PartialTranspose => Ok(partial_transpose(op).into_matrix()),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSample {
    pub kind: SpectralKind,
    pub step: usize,
    pub eigenvalues: Vec<c64>,
    /// `x_i = d · eig(ρ)` for the `d x d` density matrix `ρ = A A† / tr(A A†)`.
    pub scaled_sq_singular: Vec<f64>,
    pub ks_mp: f64,
    pub ks_radial: f64,
}

impl SpectralSample {
    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary {
            kind: self.kind,
            step: self.step,
            ks_mp: self.ks_mp,
            ks_radial: self.ks_radial,
            points: self.eigenvalues.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub kind: SpectralKind,
    pub step: usize,
    pub ks_mp: f64,
    pub ks_radial: f64,
    pub points: usize,
}

fn scaled_from_matrix(a: &CMatrix) -> Result<Vec<f64>> {
    let gram = a.gram();
    let d = gram.rows() as f64;
    let tr = gram.trace().re;
    let mut xs = gram.hermitian_eigenvalues()?;
    for x in &mut xs {
        *x *= d / tr;
        if (-ROUNDOFF..0.0).contains(x) {
            *x = 0.0;
        }
    }
    Ok(xs)
}

/// Rescaled squared singular values of the target matrix, ascending.
pub fn scaled_squared_singular_values(op: &BipartiteOperator, kind: SpectralKind) -> Result<Vec<f64>> {
    scaled_from_matrix(&target_matrix(op, kind)?)
}

pub fn spectral_sample(op: &BipartiteOperator, kind: SpectralKind, step: usize) -> Result<SpectralSample> {
    let a = target_matrix(op, kind)?;
    let eigenvalues = a.eigenvalues()?;
    let scaled_sq_singular = scaled_from_matrix(&a)?;
    Ok(SpectralSample {
        kind,
        step,
        ks_mp: ks_statistic(&scaled_sq_singular, mp_cdf),
        ks_radial: radial_ks(&eigenvalues),
        eigenvalues,
        scaled_sq_singular,
    })
}

/// Marčenko-Pastur density with unit aspect ratio, `√((4-x)/x) / 2π` on `(0, 4]`.
pub fn mp_pdf(x: f64) -> f64 {
    if x <= 0.0 || x > 4.0 {
        0.0
    } else {
        ((4.0 - x) / x).sqrt() / (2.0 * PI)
    }
}

pub fn mp_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 4.0 {
        1.0
    } else {
        2.0 / PI * (x.sqrt() / 2.0).asin() + (x * (4.0 - x)).sqrt() / (2.0 * PI)
    }
}

/// Radial CDF of the uniform unit disk.
pub fn circular_radial_cdf(r: f64) -> f64 {
    (r.max(0.0) * r.max(0.0)).min(1.0)
}

/// Two-sided Kolmogorov-Smirnov distance between the empirical distribution
/// of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let k = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / k).max((i + 1) as f64 / k - f)
        })
        .fold(0.0, f64::max)
}

/// KS distance of the moduli `|z|` from the circular-law radial CDF `r²`.
pub fn radial_ks(eigenvalues: &[c64]) -> f64 {
    let radii: Vec<f64> = eigenvalues.iter().map(|z| z.norm()).collect();
    ks_statistic(&radii, circular_radial_cdf)
}

/// `k` points uniform on the unit disk.
pub fn sample_circular_law<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<c64> {
    (0..k)
        .map(|_| {
            let r: f64 = rng.gen::<f64>().sqrt();
            c64::from_polar(r, rng.gen_range(0.0..2.0 * PI))
        })
        .collect()
}

fn matrix_power(u: &CMatrix, mut p: usize) -> CMatrix {
    let mut acc = CMatrix::identity(u.rows());
    let mut base = u.clone();
    while p > 0 {
        if p & 1 == 1 {
            acc = acc.matmul(&base);
        }
        p >>= 1;
        if p > 0 {
            base = base.matmul(&base);
        }
    }
    acc
}

/// Monte-Carlo mean of `|tr u^n|²` over Haar `u ∈ U(N)`.
pub fn cue_form_factor(order: usize, power: usize, trials: usize, seed: u64, exec: Exec) -> Result<Estimate> {
    if order == 0 || trials < 2 {
        return Err(Error::invalid("form factor needs a positive order and at least 2 trials"));
    }
    let samples = exec.map(trials, |k| {
        let u = haar_unitary(order, &mut rng_from(seed, &[k as u64]));
        matrix_power(&u, power).trace().norm_sqr()
    });
    Ok(Estimate::from_samples(&samples))
}

/// Density histogram with Freedman-Diaconis bin width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub rule: String,
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
}

pub fn histogram(samples: &[f64]) -> Histogram {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    let rule = "freedman-diaconis".to_string();
    if k < 2 || xs[0] == xs[k - 1] {
        let lo = xs.first().copied().unwrap_or(0.0);
        return Histogram {
            rule,
            edges: vec![lo, lo + 1.0],
            density: vec![if k == 0 { 0.0 } else { 1.0 }],
        };
    }
    let quantile = |q: f64| {
        let pos = q * (k - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        xs[lo] + frac * (xs[(lo + 1).min(k - 1)] - xs[lo])
    };
    let (min, max) = (xs[0], xs[k - 1]);
    let iqr = quantile(0.75) - quantile(0.25);
    let width = 2.0 * iqr / (k as f64).cbrt();
    let bins = if width > 0.0 {
        (((max - min) / width).ceil() as usize).clamp(1, 10_000)
    } else {
        (k as f64).sqrt().ceil() as usize
    };
    let width = (max - min) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &xs {
        let b = (((x - min) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    Histogram {
        rule,
        edges: (0..=bins).map(|b| min + b as f64 * width).collect(),
        density: counts.iter().map(|&c| c as f64 / (k as f64 * width)).collect(),
    }
}
