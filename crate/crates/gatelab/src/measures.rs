//! Local-unitary invariants of bipartite gates.
//!
//! Everything here is built from two purities, `tr[(U^R U^R†)²]` and
//! `tr[(U^{T_A} U^{T_A}†)²]`. Entangling power and gate typicality are
//! rescaled so that both reach 1 (at 2-unitaries and at SWAP respectively).

use serde::{Deserialize, Serialize};

use crate::bipartite::{partial_transpose, reshuffle, BipartiteOperator, Dims, UNITARY_TOL};
use crate::error::{Error, Result};
use crate::exec::{ols_slope, Estimate, Exec};
use crate::linalg::{c64, CMatrix};
use crate::random::{complex_gaussian, haar_state, party, rng_from};

/// Raw purities `(tr[(RR†)²], tr[(TT†)²])` of the reshuffled and partially
/// transposed matrices, without normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Purities {
    pub reshuffled: f64,
    pub transposed: f64,
}

/// Purities without the unitarity check. Callers inside Monte-Carlo loops
/// use this on operators that are unitary by construction.
pub fn purities_unchecked(op: &BipartiteOperator) -> Purities {
    Purities {
        reshuffled: reshuffle(op).gram_purity(),
        transposed: partial_transpose(op).matrix().gram_purity(),
    }
}

pub fn purities(op: &BipartiteOperator) -> Result<Purities> {
    op.check_unitary()?;
    Ok(purities_unchecked(op))
}

impl Purities {
    fn norm(dims: Dims) -> f64 {
        let nm = dims.total() as f64;
        nm * nm
    }

    /// `tr ρ_R²`.
    pub fn x(&self, dims: Dims) -> f64 {
        self.reshuffled / Self::norm(dims)
    }

    /// `tr ρ_T²`.
    pub fn y(&self, dims: Dims) -> f64 {
        self.transposed / Self::norm(dims)
    }

    pub fn linear_entanglement(&self, dims: Dims) -> f64 {
        1.0 - self.x(dims)
    }

    pub fn linear_entanglement_swapped(&self, dims: Dims) -> f64 {
        1.0 - self.y(dims)
    }

    pub fn entangling_power(&self, dims: Dims) -> f64 {
        let (n, m) = (dims.n() as f64, dims.m() as f64);
        (n * m * (n * m + 1.0) - self.reshuffled - self.transposed) / (m * m * (n * n - 1.0))
    }

    pub fn gate_typicality(&self, dims: Dims) -> f64 {
        let (n, m) = (dims.n() as f64, dims.m() as f64);
        (n * n * m * m - n * m - self.reshuffled + self.transposed)
            / (2.0 * n * m * (n + 1.0) * (m - 1.0))
    }
}

/// `E(U) = 1 - tr ρ_R²`.
pub fn linear_entanglement(op: &BipartiteOperator) -> Result<f64> {
    Ok(purities(op)?.linear_entanglement(op.dims()))
}

/// `1 - tr ρ_T²`; equals `E(U S)` when `n = m`.
pub fn linear_entanglement_swapped(op: &BipartiteOperator) -> Result<f64> {
    Ok(purities(op)?.linear_entanglement_swapped(op.dims()))
}

pub fn entangling_power(op: &BipartiteOperator) -> Result<f64> {
    Ok(purities(op)?.entangling_power(op.dims()))
}

pub fn gate_typicality(op: &BipartiteOperator) -> Result<f64> {
    Ok(purities(op)?.gate_typicality(op.dims()))
}

/// Mean entangling power over Haar-random gates on `C^n ⊗ C^m`.
pub fn haar_avg_ep(dims: Dims) -> f64 {
    let (n, m) = (dims.n() as f64, dims.m() as f64);
    n * (m * m - 1.0) / (m * (n * m + 1.0))
}

/// Mean gate typicality over Haar-random gates on `C^n ⊗ C^m`.
pub fn haar_avg_gt(dims: Dims) -> f64 {
    let (n, m) = (dims.n() as f64, dims.m() as f64);
    (n - 1.0) * (m + 1.0) / (2.0 * (n * m - 1.0))
}

/// Largest average linear entropy a gate can produce from product states;
/// the state-average definition is divided by this to match the rescaled
/// operator formula.
pub fn max_product_state_entropy(dims: Dims) -> f64 {
    let (n, m) = (dims.n() as f64, dims.m() as f64);
    m * (n - 1.0) / (n * (m + 1.0))
}

/// Linear entropy `1 - tr ρ_A²` of a pure state on `C^n ⊗ C^m`.
pub fn state_linear_entropy(psi: &[c64], dims: Dims) -> f64 {
    let (n, m) = (dims.n(), dims.m());
    debug_assert_eq!(psi.len(), n * m);
    // reduced state on the smaller factor: entries are overlaps of the rows
    // of the n x m coefficient matrix (or of its columns)
    let mut purity = 0.0;
    if n <= m {
        for i in 0..n {
            for j in 0..n {
                let z: c64 = (0..m).map(|a| psi[i * m + a] * psi[j * m + a].conj()).sum();
                purity += z.norm_sqr();
            }
        }
    } else {
        for a in 0..m {
            for b in 0..m {
                let z: c64 = (0..n).map(|i| psi[i * m + a] * psi[i * m + b].conj()).sum();
                purity += z.norm_sqr();
            }
        }
    }
    1.0 - purity
}

/// Monte-Carlo estimate of the rescaled entangling power from its definition
/// as the mean entanglement produced on Haar-random product states.
pub fn mc_entangling_power_oracle(
    op: &BipartiteOperator,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<Estimate> {
    if samples < 2 {
        return Err(Error::invalid("the oracle needs at least 2 samples"));
    }
    op.check_unitary()?;
    let dims = op.dims();
    let scale = 1.0 / max_product_state_entropy(dims);
    let u = op.matrix();
    let d = dims.total();
    let values = exec.map(samples, |k| {
        let k = k as u64;
        let a = haar_state(dims.n(), &mut rng_from(seed, &[k, party::A]));
        let b = haar_state(dims.m(), &mut rng_from(seed, &[k, party::B]));
        let product: Vec<c64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
        let out: Vec<c64> = (0..d)
            .map(|r| u.row(r).iter().zip(&product).map(|(x, y)| x * y).sum())
            .collect();
        scale * state_linear_entropy(&out, dims)
    });
    Ok(Estimate::from_samples(&values))
}

fn require_square(op: &BipartiteOperator, what: &str) -> Result<()> {
    if op.dims().is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} is only defined for n = m, got {}",
            op.dims()
        )))
    }
}

/// Whether the reshuffled matrix is unitary (up to `tol`).
pub fn is_dual_unitary(op: &BipartiteOperator, tol: f64) -> Result<bool> {
    require_square(op, "dual unitarity")?;
    Ok(reshuffle(op).is_unitary(tol))
}

/// Whether `U`, `U^R` and `U^{T_A}` are all unitary (up to `tol`).
pub fn is_two_unitary(op: &BipartiteOperator, tol: f64) -> Result<bool> {
    require_square(op, "2-unitarity")?;
    Ok(op.matrix().is_unitary(tol)
        && reshuffle(op).is_unitary(tol)
        && partial_transpose(op).matrix().is_unitary(tol))
}

/// Mean entangling power of `V† (u_A ⊗ u_B) V` over Haar locals.
pub fn scrambling_power(op: &BipartiteOperator) -> Result<f64> {
    let ep = entangling_power(op)?;
    Ok(scrambling_from_ep(ep, op.dims()))
}

pub fn scrambling_from_ep(ep: f64, dims: Dims) -> f64 {
    ep * (2.0 - ep / haar_avg_ep(dims))
}

/// The full invariant bundle for one gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateMeasures {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "E_swapped")]
    pub e_swapped: f64,
    pub ep: f64,
    pub gt: f64,
    /// `None` when `n != m`, where the classification does not apply.
    pub is_dual: Option<bool>,
    pub is_two_unitary: Option<bool>,
}

impl GateMeasures {
    pub fn of(op: &BipartiteOperator) -> Result<Self> {
        let p = purities(op)?;
        let dims = op.dims();
        let (is_dual, is_two_unitary) = if dims.is_square() {
            (
                Some(is_dual_unitary(op, UNITARY_TOL)?),
                Some(is_two_unitary(op, UNITARY_TOL)?),
            )
        } else {
            (None, None)
        };
        Ok(GateMeasures {
            e: p.linear_entanglement(dims),
            e_swapped: p.linear_entanglement_swapped(dims),
            ep: p.entangling_power(dims),
            gt: p.gate_typicality(dims),
            is_dual,
            is_two_unitary,
        })
    }
}

/// Signed distance of a gate above the fractional-SWAP parabola,
/// `e_p - 2 g_t (1 - g_t)`.
pub fn parabola_gap(op: &BipartiteOperator) -> Result<f64> {
    let p = purities(op)?;
    let (ep, gt) = (p.entangling_power(op.dims()), p.gate_typicality(op.dims()));
    Ok(ep - 2.0 * gt * (1.0 - gt))
}

/// Random Hermitian direction that is traceless, orthogonal to SWAP in the
/// Hilbert-Schmidt inner product, and of unit Frobenius norm.
pub fn stationary_direction(swap: &CMatrix, seed: u64, trial: u64) -> CMatrix {
    let d = swap.rows();
    let mut rng = rng_from(seed, &[trial, party::GATE]);
    let g = CMatrix::from_fn(d, d, |_, _| complex_gaussian(&mut rng));
    let mut h = g.add(&g.adjoint()).scale(c64::new(0.5, 0.0));
    let id = CMatrix::identity(d);
    let remove_trace = |x: &CMatrix| x.sub(&id.scale(x.trace() / d as f64));
    h = remove_trace(&h);
    let s0 = remove_trace(swap);
    // <s0, h> / <s0, s0>; both Hermitian so the overlap is real
    let overlap = s0.adjoint().matmul(&h).trace() / s0.frobenius_norm_sqr();
    h = h.sub(&s0.scale(overlap));
    let norm = h.frobenius_norm_sqr().sqrt();
    h.scale(c64::new(1.0 / norm, 0.0))
}

/// Outcome of perturbing `exp(i t S)` along random admissible directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub eps: f64,
    pub max_abs_gap: f64,
    pub min_gap: f64,
}

/// Evaluates the parabola gap at `exp(i (t S + eps H))` for `trials`
/// random directions `H`. Direction `k` depends only on `(seed, k)`, so
/// reports for different `eps` probe the same directions.
pub fn parabola_stationarity_check(
    n: usize,
    t: f64,
    eps: f64,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<StationarityReport> {
    if trials == 0 {
        return Err(Error::invalid("stationarity check needs at least one trial"));
    }
    let swap = crate::bipartite::swap_operator(n)?;
    let dims = swap.dims();
    let gaps = exec.map(trials, |k| -> Result<f64> {
        let h = stationary_direction(swap.matrix(), seed, k as u64);
        let gen = swap
            .matrix()
            .scale(c64::new(t, 0.0))
            .add(&h.scale(c64::new(eps, 0.0)));
        let u = BipartiteOperator::unitary(dims, gen.exp_i_hermitian()?)?;
        parabola_gap(&u)
    });
    let mut report = StationarityReport {
        eps,
        max_abs_gap: 0.0,
        min_gap: f64::INFINITY,
    };
    for gap in gaps {
        let gap = gap?;
        report.max_abs_gap = report.max_abs_gap.max(gap.abs());
        report.min_gap = report.min_gap.min(gap);
    }
    Ok(report)
}

/// Log-log slope of the maximal gap against `eps`.
pub fn stationarity_slope(reports: &[StationarityReport]) -> f64 {
    let xs: Vec<f64> = reports.iter().map(|r| r.eps.ln()).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.max_abs_gap.ln()).collect();
    ols_slope(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::swap_operator;
    use crate::random::haar_unitary;

    fn cnot() -> BipartiteOperator {
        let m = CMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        BipartiteOperator::unitary(Dims::square(2).unwrap(), m).unwrap()
    }

    #[test]
    fn cnot_values() {
        let g = GateMeasures::of(&cnot()).unwrap();
        assert!((g.e - 0.5).abs() < 1e-14);
        assert!((g.e_swapped - 0.75).abs() < 1e-14);
        assert!((g.ep - 2.0 / 3.0).abs() < 1e-14);
        assert!((g.gt - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(g.is_dual, Some(false));
    }

    #[test]
    fn swap_values() {
        for n in 2..=4 {
            let s = swap_operator(n).unwrap();
            let g = GateMeasures::of(&s).unwrap();
            let nn = (n * n) as f64;
            assert!((g.e - (1.0 - 1.0 / nn)).abs() < 1e-14);
            assert!(g.e_swapped.abs() < 1e-14);
            assert!(g.ep.abs() < 1e-14);
            assert!((g.gt - 1.0).abs() < 1e-14);
            assert_eq!(g.is_dual, Some(true));
            assert_eq!(g.is_two_unitary, Some(false));
        }
    }

    #[test]
    fn identity_is_zero_everywhere() {
        for dims in [Dims::new(2, 2).unwrap(), Dims::new(2, 3).unwrap(), Dims::new(4, 3).unwrap()] {
            let g = GateMeasures::of(&BipartiteOperator::identity(dims)).unwrap();
            assert!(g.e.abs() < 1e-14 && g.ep.abs() < 1e-14 && g.gt.abs() < 1e-14);
        }
    }

    #[test]
    fn non_unitary_is_rejected() {
        let op = BipartiteOperator::new(
            Dims::square(2).unwrap(),
            CMatrix::identity(4).scale(c64::new(0.5, 0.0)),
        )
        .unwrap();
        assert!(matches!(entangling_power(&op), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn haar_averages() {
        let d22 = Dims::square(2).unwrap();
        assert!((haar_avg_ep(d22) - 0.6).abs() < 1e-15);
        assert!((haar_avg_gt(d22) - 0.5).abs() < 1e-15);
        let d23 = Dims::new(2, 3).unwrap();
        assert!((haar_avg_ep(d23) - 16.0 / 21.0).abs() < 1e-15);
        assert!((haar_avg_gt(d23) - 0.4).abs() < 1e-15);
        let d33 = Dims::square(3).unwrap();
        assert!((haar_avg_ep(d33) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn swapped_entanglement_equals_entanglement_of_u_times_swap() {
        for n in [2, 3] {
            let dims = Dims::square(n).unwrap();
            let s = swap_operator(n).unwrap();
            for k in 0..5 {
                let u = BipartiteOperator::unitary(dims, haar_unitary(n * n, &mut rng_from(k, &[n as u64]))).unwrap();
                let lhs = linear_entanglement_swapped(&u).unwrap();
                let rhs = linear_entanglement(&u.compose(&s).unwrap()).unwrap();
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_is_exactly_zero_for_locals_and_swap() {
        let mut rng = rng_from(1, &[]);
        let local = BipartiteOperator::local(&haar_unitary(2, &mut rng), &haar_unitary(3, &mut rng)).unwrap();
        let est = mc_entangling_power_oracle(&local, 200, 9, Exec::Sequential).unwrap();
        assert!(est.mean.abs() < 1e-13);
        let est = mc_entangling_power_oracle(&swap_operator(3).unwrap(), 200, 9, Exec::Sequential).unwrap();
        assert!(est.mean.abs() < 1e-13);
    }

    #[test]
    fn oracle_agrees_with_cnot() {
        let est = mc_entangling_power_oracle(&cnot(), 20_000, 4, Exec::Parallel).unwrap();
        assert!(est.within_sigmas(2.0 / 3.0, 3.0), "{est:?}");
    }

    #[test]
    fn oracle_does_not_depend_on_strategy() {
        let a = mc_entangling_power_oracle(&cnot(), 300, 8, Exec::Sequential).unwrap();
        let b = mc_entangling_power_oracle(&cnot(), 300, 8, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn classification_needs_square_dims() {
        let op = BipartiteOperator::identity(Dims::new(2, 3).unwrap());
        assert!(is_dual_unitary(&op, 1e-10).is_err());
        assert!(is_two_unitary(&op, 1e-10).is_err());
        assert_eq!(GateMeasures::of(&op).unwrap().is_dual, None);
    }

    #[test]
    fn scrambling_examples() {
        let d = Dims::square(2).unwrap();
        assert!((scrambling_from_ep(haar_avg_ep(d), d) - haar_avg_ep(d)).abs() < 1e-15);
        assert!((scrambling_power(&cnot()).unwrap() - 16.0 / 27.0).abs() < 1e-14);
        assert_eq!(scrambling_from_ep(0.0, d), 0.0);
    }

    #[test]
    fn direction_is_admissible() {
        let s = swap_operator(3).unwrap();
        let h = stationary_direction(s.matrix(), 5, 0);
        assert!(h.trace().norm() < 1e-12);
        assert!(s.matrix().matmul(&h).trace().norm() < 1e-12);
        assert!((h.frobenius_norm_sqr() - 1.0).abs() < 1e-12);
        assert!(h.max_abs_diff(&h.adjoint()) < 1e-15);
    }

    #[test]
    fn unperturbed_family_sits_on_the_parabola() {
        for k in 0..10 {
            let t = 0.15 * k as f64;
            let r = parabola_stationarity_check(2, t, 0.0, 2, 1, Exec::Sequential).unwrap();
            assert!(r.max_abs_gap < 1e-10, "t={t}: {r:?}");
        }
    }

    #[test]
    fn perturbation_gap_is_quadratic() {
        let reports: Vec<_> = [1e-2, 5e-3, 2.5e-3]
            .iter()
            .map(|&eps| parabola_stationarity_check(2, std::f64::consts::FRAC_PI_4, eps, 20, 3, Exec::Parallel).unwrap())
            .collect();
        let slope = stationarity_slope(&reports);
        assert!((slope - 2.0).abs() < 0.3, "{slope}");
        assert!(reports.iter().all(|r| r.min_gap >= -1e-12));
    }
}
