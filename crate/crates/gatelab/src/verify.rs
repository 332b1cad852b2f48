//! Desk-scale invariant suite behind `gatelab verify`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bipartite::{partial_transpose, reshuffle, schmidt_spectrum, swap_operator, BipartiteOperator, Dims};
use crate::error::Result;
use crate::exec::Exec;
use crate::gates::{self, cartan_ep_gt, cartan_gate, CartanCoords, WeylEdge};
use crate::measures::{self, haar_avg_ep, haar_avg_gt, GateMeasures};
use crate::random::{haar_unitary, rng_from};
use crate::spectra;
use crate::thermal;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub quick: bool,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Scale {
    samples: usize,
    mc: usize,
}

type Check = fn(&Scale, u64, Exec) -> Result<(bool, String)>;

fn haar(dims: Dims, seed: u64, k: u64) -> BipartiteOperator {
    BipartiteOperator::new(dims, haar_unitary(dims.total(), &mut rng_from(seed, &[k]))).expect("order matches")
}

fn dims(n: usize, m: usize) -> Dims {
    Dims::new(n, m).expect("valid dims")
}

fn table_one(_: &Scale, _: u64, _: Exec) -> Result<(bool, String)> {
    let rows: [(&str, BipartiteOperator, [f64; 4]); 7] = [
        ("local", BipartiteOperator::identity(dims(2, 2)), [0.0, 0.75, 0.0, 0.0]),
        ("sqrt-cnot", gates::sqrt_cnot(), [0.25, 0.75, 1.0 / 3.0, 1.0 / 6.0]),
        ("cnot", gates::cnot(), [0.5, 0.75, 2.0 / 3.0, 1.0 / 3.0]),
        ("dcnot", gates::dcnot(), [0.75, 0.5, 2.0 / 3.0, 2.0 / 3.0]),
        ("fourier", gates::fourier_gate(2)?, [0.75, 0.25, 1.0 / 3.0, 5.0 / 6.0]),
        ("sqrt-swap", gates::sqrt_swap(), [9.0 / 16.0, 9.0 / 16.0, 0.5, 0.5]),
        ("swap", swap_operator(2)?, [0.75, 0.0, 0.0, 1.0]),
    ];
    let mut worst: f64 = 0.0;
    for (_, op, want) in &rows {
        let g = GateMeasures::of(op)?;
        for (got, want) in [g.e, g.e_swapped, g.ep, g.gt].iter().zip(want) {
            worst = worst.max((got - want).abs());
        }
    }
    Ok((worst < 1e-12, format!("max deviation {worst:.2e}")))
}

fn involutions(s: &Scale, seed: u64, _: Exec) -> Result<(bool, String)> {
    let mut ok = true;
    for (k, d) in [dims(2, 2), dims(3, 3), dims(2, 3)].into_iter().enumerate() {
        for j in 0..s.samples.min(20) {
            let u = haar(d, seed, (k * 1000 + j) as u64);
            ok &= partial_transpose(&partial_transpose(&u)) == u;
            if d.is_square() {
                let r = BipartiteOperator::new(d, reshuffle(&u))?;
                ok &= &reshuffle(&r) == u.matrix();
            }
            let norm = reshuffle(&u).frobenius_norm_sqr();
            ok &= (norm - u.matrix().frobenius_norm_sqr()).abs() < 1e-10;
        }
    }
    Ok((ok, "reshuffle and partial transpose are exact involutions".into()))
}

fn schmidt_sums(s: &Scale, seed: u64, _: Exec) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (k, d) in [dims(2, 2), dims(2, 3), dims(3, 3)].into_iter().enumerate() {
        for j in 0..s.samples.min(100) {
            let u = haar(d, seed, (k * 1000 + j) as u64);
            let sum = schmidt_spectrum(&u)?.sum();
            let nm = d.total() as f64;
            worst = worst.max((sum - nm).abs() / nm);
        }
    }
    Ok((worst < 1e-8, format!("max relative deviation {worst:.2e}")))
}

fn local_invariance(s: &Scale, seed: u64, _: Exec) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for (k, d) in [dims(2, 2), dims(2, 3)].into_iter().enumerate() {
        for j in 0..s.samples.min(50) {
            let path = (k * 1000 + j) as u64;
            let u = haar(d, seed, path);
            let mut rng = rng_from(seed, &[path, 99]);
            let mut local = || BipartiteOperator::local(&haar_unitary(d.n(), &mut rng), &haar_unitary(d.m(), &mut rng));
            let (left, right) = (local()?, local()?);
            let v = left.compose(&u)?.compose(&right)?;
            let (a, b) = (GateMeasures::of(&u)?, GateMeasures::of(&v)?);
            worst = worst.max((a.ep - b.ep).abs()).max((a.gt - b.gt).abs());
        }
    }
    Ok((worst < 1e-10, format!("max change {worst:.2e}")))
}

fn complementarity(s: &Scale, seed: u64, _: Exec) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in [2, 3] {
        let swap = swap_operator(n)?;
        for j in 0..s.samples.min(50) {
            let u = haar(dims(n, n), seed, (n * 1000 + j) as u64);
            let sum = measures::gate_typicality(&u)? + measures::gate_typicality(&u.compose(&swap)?)?;
            worst = worst.max((sum - 1.0).abs());
            let adj = (measures::entangling_power(&u)? - measures::entangling_power(&u.adjoint())?).abs();
            worst = worst.max(adj);
        }
    }
    Ok((worst < 1e-10, format!("g_t(U) + g_t(US) - 1 and e_p(U) - e_p(U†) up to {worst:.2e}")))
}

fn two_qubit_bounds(s: &Scale, seed: u64, exec: Exec) -> Result<(bool, String)> {
    let d = dims(2, 2);
    let worst = exec
        .map(s.samples, |k| {
            let u = haar(d, seed, k as u64);
            let p = measures::purities_unchecked(&u);
            let (ep, gt) = (p.entangling_power(d), p.gate_typicality(d));
            let parabola = 2.0 * gt * (1.0 - gt) - ep;
            let top = ep + 2.0 * gt - 2.0;
            let bottom = ep / 2.0 - gt;
            parabola.max(top).max(bottom)
        })
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((worst <= 1e-9, format!("largest violation {worst:.2e} over {} gates", s.samples)))
}

fn cartan_forms(s: &Scale, seed: u64, _: Exec) -> Result<(bool, String)> {
    use rand::Rng;
    let mut rng = rng_from(seed, &[7]);
    let mut worst: f64 = 0.0;
    for _ in 0..s.samples.min(100) {
        let c = CartanCoords::new(rng.gen_range(-3.2..3.2), rng.gen_range(-3.2..3.2), rng.gen_range(-3.2..3.2));
        let g = GateMeasures::of(&cartan_gate(c))?;
        let (ep, gt) = cartan_ep_gt(c);
        worst = worst.max((g.ep - ep).abs()).max((g.gt - gt).abs());
    }
    let mut edge_worst: f64 = 0.0;
    for edge in WeylEdge::ALL {
        for k in 0..=50 {
            let g = GateMeasures::of(&cartan_gate(edge.point(k as f64 / 50.0)))?;
            edge_worst = edge_worst.max(edge.residual(g.ep, g.gt).abs());
        }
    }
    Ok((
        worst < 1e-10 && edge_worst < 1e-9,
        format!("closed forms {worst:.2e}, Weyl edges {edge_worst:.2e}"),
    ))
}

fn swap_parabola(_: &Scale, _: u64, _: Exec) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for n in 2..=5 {
        for k in 0..50 {
            let t = k as f64 * std::f64::consts::PI / 49.0;
            let g = GateMeasures::of(&gates::fractional_swap(t, n)?)?;
            worst = worst
                .max((g.ep - 2.0 * g.gt * (1.0 - g.gt)).abs())
                .max((g.ep - (2.0 * t).sin().powi(2) / 2.0).abs())
                .max((g.gt - t.sin().powi(2)).abs());
        }
    }
    Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
}

fn multiunitarity(_: &Scale, _: u64, _: Exec) -> Result<(bool, String)> {
    let p9 = gates::perm_p9();
    let f9 = gates::fourier_gate(3)?;
    let ok = measures::is_two_unitary(&p9, 1e-12)?
        && measures::is_dual_unitary(&f9, 1e-12)?
        && !measures::is_two_unitary(&f9, 1e-12)?;
    Ok((ok, "P9 is 2-unitary; F9 is dual but not 2-unitary".into()))
}

fn haar_means(s: &Scale, seed: u64, exec: Exec) -> Result<(bool, String)> {
    let mut ok = true;
    let mut detail = Vec::new();
    for d in [dims(2, 2), dims(2, 3)] {
        let pairs = exec.map(s.mc, |k| {
            let p = measures::purities_unchecked(&haar(d, seed, k as u64));
            (p.entangling_power(d), p.gate_typicality(d))
        });
        let ep = pairs.iter().map(|p| p.0).sum::<f64>() / s.mc as f64;
        let gt = pairs.iter().map(|p| p.1).sum::<f64>() / s.mc as f64;
        let tol = 1.0 / (s.mc as f64).sqrt();
        ok &= (ep - haar_avg_ep(d)).abs() < tol && (gt - haar_avg_gt(d)).abs() < tol;
        detail.push(format!("{d}: ep {ep:.4}, gt {gt:.4}"));
    }
    Ok((ok, detail.join("; ")))
}

fn oracle(s: &Scale, seed: u64, exec: Exec) -> Result<(bool, String)> {
    let mut ok = true;
    for d in [dims(2, 2), dims(2, 3)] {
        for k in 0..3 {
            let u = haar(d, seed, 500 + k);
            let est = measures::mc_entangling_power_oracle(&u, s.mc, seed ^ k, exec)?;
            ok &= est.within_sigmas(measures::entangling_power(&u)?, 4.0);
        }
    }
    Ok((ok, "state-average oracle within 4 sigma of the operator formula".into()))
}

fn two_gate(s: &Scale, seed: u64, exec: Exec) -> Result<(bool, String)> {
    let d = dims(2, 3);
    let mut ok = true;
    for k in 0..2 {
        let (u, v) = (haar(d, seed, 900 + 2 * k), haar(d, seed, 901 + 2 * k));
        let res = thermal::avg_ep_two_gate(&u, &v, s.mc, seed + k, exec)?;
        ok &= res.mc.within_sigmas(res.closed_form, 4.0);
    }
    Ok((ok, "two-gate local average matches its closed form".into()))
}

fn stationarity(s: &Scale, seed: u64, exec: Exec) -> Result<(bool, String)> {
    let trials = s.samples.min(100) / 5;
    let reports: Vec<_> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&eps| measures::parabola_stationarity_check(2, std::f64::consts::FRAC_PI_4, eps, trials, seed, exec))
        .collect::<Result<_>>()?;
    let slope = measures::stationarity_slope(&reports);
    Ok(((slope - 2.0).abs() < 0.3, format!("log-log slope {slope:.3}")))
}

fn form_factor(s: &Scale, seed: u64, exec: Exec) -> Result<(bool, String)> {
    let a = spectra::cue_form_factor(8, 3, s.mc, seed, exec)?;
    let b = spectra::cue_form_factor(8, 20, s.mc, seed + 1, exec)?;
    let ok = a.within_sigmas(3.0, 4.0) && b.within_sigmas(8.0, 4.0);
    Ok((ok, format!("n=3: {:.3}, n=20: {:.3}", a.mean, b.mean)))
}

fn mp_law(_: &Scale, seed: u64, _: Exec) -> Result<(bool, String)> {
    let u = haar(dims(20, 20), seed, 4242);
    let xs = spectra::scaled_squared_singular_values(&u, spectra::SpectralKind::Reshuffled)?;
    let ks = spectra::ks_statistic(&xs, spectra::mp_cdf);
    Ok((ks < 0.05, format!("KS {ks:.4} at N = 20")))
}

const CHECKS: &[(&str, bool, Check)] = &[
    ("table-one", true, table_one),
    ("involutions", true, involutions),
    ("schmidt-sums", true, schmidt_sums),
    ("local-invariance", true, local_invariance),
    ("complementarity", true, complementarity),
    ("two-qubit-bounds", true, two_qubit_bounds),
    ("cartan-closed-forms", true, cartan_forms),
    ("swap-parabola", true, swap_parabola),
    ("multiunitarity", true, multiunitarity),
    ("haar-means", true, haar_means),
    ("state-average-oracle", true, oracle),
    ("stationarity", true, stationarity),
    ("two-gate-average", false, two_gate),
    ("form-factor", false, form_factor),
    ("marcenko-pastur", false, mp_law),
];

/// Runs the suite; `quick` keeps only the fast checks at reduced sizes.
pub fn run_suite(quick: bool, seed: u64, exec: Exec) -> VerifyReport {
    let scale = if quick {
        Scale { samples: 1000, mc: 2000 }
    } else {
        Scale { samples: 10_000, mc: 10_000 }
    };
    let checks = CHECKS
        .iter()
        .filter(|(_, fast, _)| *fast || !quick)
        .map(|(name, _, check)| {
            let start = Instant::now();
            let (passed, detail) = match check(&scale, seed, exec) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckResult {
                name: name.to_string(),
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    VerifyReport { quick, seed, checks }
}
