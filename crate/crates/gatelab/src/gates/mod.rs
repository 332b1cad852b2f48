//! Named gate families.

mod cartan;
mod spec;

pub use cartan::{cartan_ep_gt, cartan_gate, e_from_invariants, local_invariants, CartanCoords, WeylEdge};
pub use spec::{parse_gate_spec, GateSpec};

use std::f64::consts::PI;

use rand::Rng;

use crate::bipartite::{swap_operator, BipartiteOperator, Dims};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::linalg::{c64, CMatrix, I, ONE};
use crate::random::{haar_unitary, party, rng_from};

fn qubit_pair() -> Dims {
    Dims::square(2).expect("2x2 is valid")
}

fn permutation(dims: Dims, image: impl Fn(usize, usize) -> (usize, usize)) -> BipartiteOperator {
    let (n, m) = (dims.n(), dims.m());
    let mut p = CMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for a in 0..m {
            let (j, b) = image(i, a);
            p[(j * m + b, i * m + a)] = ONE;
        }
    }
    BipartiteOperator::new(dims, p).expect("order matches dims")
}

/// CNOT with the first qubit as control.
pub fn cnot() -> BipartiteOperator {
    controlled_add(2).expect("n = 2 is valid")
}

/// Double CNOT, `CNOT · SWAP = CNOT_21 · CNOT_12`.
pub fn dcnot() -> BipartiteOperator {
    let s = swap_operator(2).expect("n = 2 is valid");
    cnot().compose(&s).expect("same dims")
}

/// Controlled square root of X.
pub fn sqrt_cnot() -> BipartiteOperator {
    let p = c64::new(0.5, 0.5);
    let q = c64::new(0.5, -0.5);
    let ub = CMatrix::from_vec(2, 2, vec![p, q, q, p]).expect("2x2");
    controlled_unitary(2, 1, &ub).expect("valid rank")
}

/// Square root of SWAP, the midpoint of the SWAP-power family.
pub fn sqrt_swap() -> BipartiteOperator {
    let p = c64::new(0.5, 0.5);
    let q = c64::new(0.5, -0.5);
    let mut m = CMatrix::identity(4);
    m[(1, 1)] = p;
    m[(2, 2)] = p;
    m[(1, 2)] = q;
    m[(2, 1)] = q;
    BipartiteOperator::new(qubit_pair(), m).expect("4x4")
}

/// `exp(i t S) = cos t + i sin t S` on `C^n ⊗ C^n`.
pub fn fractional_swap(t: f64, n: usize) -> Result<BipartiteOperator> {
    let s = swap_operator(n)?;
    let mat = CMatrix::identity(n * n)
        .scale(c64::new(t.cos(), 0.0))
        .add(&s.matrix().scale(I * t.sin()));
    BipartiteOperator::new(s.dims(), mat)
}

/// `CNOT · S^α` interpolating between CNOT (α = 0) and DCNOT (α = 1).
pub fn cs_alpha(alpha: f64) -> Result<BipartiteOperator> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let t = PI * alpha / 2.0;
    // exp(itS) carries a phase e^{it} relative to S^α
    let root = fractional_swap(t, 2)?.scale(c64::from_polar(1.0, -t));
    cnot().compose(&root)
}

/// Discrete Fourier transform of order `n²` read as a two-qudit gate:
/// `⟨kα|F|jβ⟩ = exp(2πi (k + αn)(j + βn) / n²) / n`.
pub fn fourier_gate(n: usize) -> Result<BipartiteOperator> {
    let dims = Dims::square(n)?;
    let d = n * n;
    let mat = CMatrix::from_fn(d, d, |r, c| {
        let (k, alpha) = (r / n, r % n);
        let (j, beta) = (c / n, c % n);
        let phase = ((k + alpha * n) * (j + beta * n)) % d;
        c64::from_polar(1.0 / n as f64, 2.0 * PI * phase as f64 / d as f64)
    });
    BipartiteOperator::new(dims, mat)
}

/// `E(F S)` for the Fourier gate from its finite-`n` sum.
pub fn fourier_swapped_entanglement(n: usize) -> f64 {
    let nf = n as f64;
    let base = PI / nf;
    let sum: f64 = (1..n)
        .map(|k| {
            let k = k as f64;
            k * (k * base).sin().powi(2) / (base - k * PI / (nf * nf)).sin().powi(2)
        })
        .sum();
    1.0 - (nf.powi(3) + 2.0 * sum) / nf.powi(4)
}

/// Large-`n` limit of [`fourier_swapped_entanglement`].
pub fn fourier_swapped_entanglement_limit() -> f64 {
    // composite Simpson on [0, 1]; the integrand tends to π² at x = 1
    let f = |x: f64| {
        if (1.0 - x).abs() < 1e-12 {
            PI * PI
        } else {
            x * (PI * x).sin().powi(2) / (1.0 - x).powi(2)
        }
    };
    let steps = 20_000;
    let h = 1.0 / steps as f64;
    let mut acc = f(0.0) + f(1.0);
    for k in 1..steps {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    1.0 - 2.0 / (PI * PI) * acc * h / 3.0
}

/// `P ⊗ 1 + (1 - P) ⊗ u_B` with `P` projecting onto the first `rank` basis
/// states of the control (dimension `n`).
pub fn controlled_unitary(n: usize, rank: usize, ub: &CMatrix) -> Result<BipartiteOperator> {
    if !ub.is_square() {
        return Err(Error::DimensionMismatch("target unitary must be square".into()));
    }
    if rank == 0 || rank >= n {
        return Err(Error::invalid(format!("projector rank must lie in [1, {}], got {rank}", n.saturating_sub(1))));
    }
    let dims = Dims::new(n, ub.rows())?;
    let m = dims.m();
    let mut mat = CMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for a in 0..m {
            if i < rank {
                mat[(i * m + a, i * m + a)] = ONE;
            } else {
                for b in 0..m {
                    mat[(i * m + a, i * m + b)] = ub[(a, b)];
                }
            }
        }
    }
    BipartiteOperator::unitary(dims, mat)
}

/// Diagonal gate with independent phases `exp(2πi eps ξ)`, `ξ` uniform on
/// `[-1/2, 1/2)`.
pub fn diagonal_interaction<R: Rng + ?Sized>(dims: Dims, eps: f64, rng: &mut R) -> Result<BipartiteOperator> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("eps must lie in [0, 1], got {eps}")));
    }
    let phases: Vec<c64> = (0..dims.total())
        .map(|_| {
            let xi: f64 = rng.gen_range(-0.5..0.5);
            c64::from_polar(1.0, 2.0 * PI * eps * xi)
        })
        .collect();
    BipartiteOperator::new(dims, CMatrix::diagonal(&phases))
}

/// The two-qutrit permutation `|i, j⟩ -> |i + j, i + 2j⟩ (mod 3)`.
pub fn perm_p9() -> BipartiteOperator {
    let dims = Dims::square(3).expect("3x3 is valid");
    permutation(dims, |i, j| ((i + j) % 3, (i + 2 * j) % 3))
}

/// `|i, j⟩ -> |i, i + j mod n⟩`.
pub fn controlled_add(n: usize) -> Result<BipartiteOperator> {
    let dims = Dims::square(n)?;
    Ok(permutation(dims, |i, j| (i, (i + j) % n)))
}

/// Haar-random gate on `C^n ⊗ C^m`.
pub fn haar_gate<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> BipartiteOperator {
    BipartiteOperator::new(dims, haar_unitary(dims.total(), rng)).expect("order matches dims")
}

/// `V_ε = W diag(e^{iεξ}) W†` with Haar `W` and `ξ` uniform on `[-π, π)`.
pub fn perturbation<R: Rng + ?Sized>(dims: Dims, eps: f64, rng: &mut R) -> Result<BipartiteOperator> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("eps must lie in [0, 1], got {eps}")));
    }
    let d = dims.total();
    let w = haar_unitary(d, rng);
    let phases: Vec<c64> = (0..d)
        .map(|_| c64::from_polar(1.0, eps * rng.gen_range(-PI..PI)))
        .collect();
    let mut wd = w.clone();
    for r in 0..d {
        for c in 0..d {
            wd[(r, c)] *= phases[c];
        }
    }
    BipartiteOperator::new(dims, wd.matmul(&w.adjoint()))
}

/// `trials` samples `base · V_ε`; sample `k` is drawn from `(seed, k)`.
pub fn perturbation_ensemble(
    base: &BipartiteOperator,
    eps: f64,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<BipartiteOperator>> {
    exec.map(trials, |k| {
        let v = perturbation(base.dims(), eps, &mut rng_from(seed, &[k as u64, party::GATE]))?;
        base.compose(&v)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::GateMeasures;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn constructors_are_unitary() {
        let mut rng = rng_from(0, &[]);
        let ops = vec![
            cnot(),
            dcnot(),
            sqrt_cnot(),
            sqrt_swap(),
            fractional_swap(0.3, 3).unwrap(),
            cs_alpha(0.4).unwrap(),
            fourier_gate(3).unwrap(),
            controlled_unitary(5, 2, &haar_unitary(3, &mut rng)).unwrap(),
            diagonal_interaction(Dims::new(2, 3).unwrap(), 0.5, &mut rng).unwrap(),
            perm_p9(),
            controlled_add(4).unwrap(),
            perturbation(Dims::square(2).unwrap(), 0.3, &mut rng).unwrap(),
        ];
        for op in ops {
            op.check_unitary().unwrap();
        }
    }

    #[test]
    fn dcnot_is_cnot_pair() {
        let s = swap_operator(2).unwrap();
        let cnot21 = s.compose(&cnot()).unwrap().compose(&s).unwrap();
        assert_eq!(dcnot(), cnot21.compose(&cnot()).unwrap());
    }

    #[test]
    fn fractional_swap_endpoints() {
        let id = fractional_swap(0.0, 3).unwrap();
        assert_eq!(id, BipartiteOperator::identity(id.dims()));
        let half = fractional_swap(PI / 2.0, 2).unwrap();
        let is = swap_operator(2).unwrap().scale(I);
        assert!(half.matrix().max_abs_diff(is.matrix()) < 1e-15);
    }

    #[test]
    fn sqrt_swap_squares_to_swap() {
        let r = sqrt_swap();
        let sq = r.compose(&r).unwrap();
        assert!(sq.matrix().max_abs_diff(swap_operator(2).unwrap().matrix()) < 1e-15);
    }

    #[test]
    fn sqrt_cnot_squares_to_cnot() {
        let r = sqrt_cnot();
        assert!(r.compose(&r).unwrap().matrix().max_abs_diff(cnot().matrix()) < 1e-15);
    }

    #[test]
    fn cs_alpha_endpoints() {
        assert!(cs_alpha(0.0).unwrap().matrix().max_abs_diff(cnot().matrix()) < 1e-15);
        assert!(cs_alpha(1.0).unwrap().matrix().max_abs_diff(dcnot().matrix()) < 1e-15);
        assert!(cs_alpha(1.2).is_err());
        assert!(cs_alpha(-0.1).is_err());
    }

    #[test]
    fn cs_alpha_half() {
        let g = GateMeasures::of(&cs_alpha(0.5).unwrap()).unwrap();
        assert!(close(g.e, 5.0 / 8.0));
        assert!(close(g.gt, 0.5));
        assert!(close(g.ep, 2.0 / 3.0));
    }

    #[test]
    fn fourier_table_values() {
        let g = GateMeasures::of(&fourier_gate(2).unwrap()).unwrap();
        assert!(close(g.e, 0.75));
        assert!(close(g.e_swapped, 0.25));
        assert!(close(g.ep, 1.0 / 3.0));
        assert!(close(g.gt, 5.0 / 6.0));
    }

    #[test]
    fn fourier_sum_matches_matrix() {
        for n in 2..=6 {
            let g = GateMeasures::of(&fourier_gate(n).unwrap()).unwrap();
            assert!((g.e_swapped - fourier_swapped_entanglement(n)).abs() < 1e-10, "n={n}");
            assert!((g.e - (1.0 - 1.0 / (n * n) as f64)).abs() < 1e-10);
            assert_eq!(g.is_dual, Some(true));
        }
        assert!(close(fourier_swapped_entanglement(2), 0.25));
    }

    #[test]
    fn fourier_limit() {
        let limit = fourier_swapped_entanglement_limit();
        assert!((limit - 0.344).abs() < 5e-4, "{limit}");
        assert!((fourier_swapped_entanglement(400) - limit).abs() < 1e-2);
    }

    #[test]
    fn controlled_add_two_is_cnot() {
        let c = controlled_add(2).unwrap();
        let expected = CMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        assert_eq!(c.matrix(), &expected);
    }

    #[test]
    fn controlled_add_three_has_unitary_partial_transpose() {
        let g = GateMeasures::of(&controlled_add(3).unwrap()).unwrap();
        assert!(close(g.e_swapped, 1.0 - 1.0 / 9.0));
    }

    #[test]
    fn controlled_unitary_with_x_is_cnot() {
        let x = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(controlled_unitary(2, 1, &x).unwrap(), cnot());
        assert!(controlled_unitary(2, 0, &x).is_err());
        assert!(controlled_unitary(2, 2, &x).is_err());
    }

    #[test]
    fn p9_is_maximally_entangling() {
        let g = GateMeasures::of(&perm_p9()).unwrap();
        assert!((g.ep - 1.0).abs() < 1e-12);
        assert!((g.gt - 0.5).abs() < 1e-12);
        assert_eq!(g.is_two_unitary, Some(true));
    }

    #[test]
    fn zero_strength_perturbations_are_trivial() {
        let mut rng = rng_from(4, &[]);
        let d = diagonal_interaction(Dims::new(2, 3).unwrap(), 0.0, &mut rng).unwrap();
        assert_eq!(d, BipartiteOperator::identity(d.dims()));
        let base = sqrt_swap();
        for v in perturbation_ensemble(&base, 0.0, 4, 1, Exec::Sequential).unwrap() {
            assert!(v.matrix().max_abs_diff(base.matrix()) < 1e-13);
        }
    }
}
