//! Repeated application of a fixed gate interlaced with random local
//! unitaries: `W_1 = U`, `W_n = U (u_A ⊗ u_B) W_{n-1}`.
//!
//! Trials are grouped into fixed blocks; each block accumulates its own
//! statistics and blocks are merged in index order, so results do not depend
//! on how many threads run them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bipartite::{BipartiteOperator, Dims};
use crate::error::{Error, Result};
use crate::exec::{ols_slope, Estimate, Exec, Welford};
use crate::gates::{controlled_unitary, diagonal_interaction, GateSpec};
use crate::linalg::{CMatrix, ZERO};
use crate::measures::{haar_avg_ep, haar_avg_gt, purities_unchecked, Purities};
use crate::random::{derive_seed, haar_unitary, party, rng_from, GateRng};

/// Trials per accumulation block.
const BLOCK: usize = 128;

/// A trial whose product drifts further than this from unitarity is dropped.
const DRIFT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionMode {
    /// New Haar locals for every trial and step.
    #[default]
    FreshLocals,
    /// One pair of locals per trial, reused at every step.
    FixedLocals,
    /// Plain powers `U^n`.
    NoLocals,
}

impl EvolutionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvolutionMode::FreshLocals => "fresh-locals",
            EvolutionMode::FixedLocals => "fixed-locals",
            EvolutionMode::NoLocals => "no-locals",
        }
    }
}

impl fmt::Display for EvolutionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvolutionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fresh-locals" => Ok(EvolutionMode::FreshLocals),
            "fixed-locals" => Ok(EvolutionMode::FixedLocals),
            "no-locals" => Ok(EvolutionMode::NoLocals),
            _ => Err(Error::invalid(format!(
                "mode must be fresh-locals, fixed-locals or no-locals, got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub gate: GateSpec,
    pub dims: Dims,
    pub steps: usize,
    pub trials: usize,
    pub seed: u64,
    pub mode: EvolutionMode,
}

impl EvolutionConfig {
    fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.trials == 0 {
            return Err(Error::invalid("steps and trials must both be at least 1"));
        }
        Ok(())
    }

    /// The fixed gate of the evolution. Random families without their own
    /// seed draw from a stream derived from the master seed.
    pub fn build_gate(&self) -> Result<BipartiteOperator> {
        self.gate.build(Some(self.dims), Some(gate_seed(self.seed)))
    }
}

/// Seed for a random gate spec that carries none, derived from the master
/// seed on a path no trial index can reach.
pub fn gate_seed(master: u64) -> u64 {
    derive_seed(master, &[u64::MAX, party::GATE])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub n: usize,
    pub mean_ep: f64,
    pub stderr_ep: f64,
    pub mean_gt: f64,
    pub stderr_gt: f64,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub stderr_x: f64,
    pub stderr_y: f64,
    pub theory_ep: f64,
    pub theory_gt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dims: Dims,
    pub gate_ep: f64,
    pub gate_gt: f64,
    pub trials_used: usize,
    pub rows: Vec<TrajectoryRow>,
    /// One entry per dropped trial.
    pub diagnostics: Vec<String>,
}

impl Trajectory {
    /// `max_n |mean_ep(n) - theory_ep(n)|`.
    pub fn max_theory_deviation(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.mean_ep - r.theory_ep).abs())
            .fold(0.0, f64::max)
    }
}

/// `ē_p [1 - (1 - e_p(U)/ē_p)^n]`.
pub fn theory_ep(n: usize, ep_gate: f64, dims: Dims) -> f64 {
    let avg = haar_avg_ep(dims);
    avg * (1.0 - (1.0 - ep_gate / avg).powi(n as i32))
}

/// `ḡ_t [1 - (1 - g_t(U)/ḡ_t)^n]`.
pub fn theory_gt(n: usize, gt_gate: f64, dims: Dims) -> f64 {
    let avg = haar_avg_gt(dims);
    avg * (1.0 - (1.0 - gt_gate / avg).powi(n as i32))
}

/// Steps needed for a gate of entangling power `≈ N ε²/(N+1)` to reach
/// the Haar average.
pub fn saturation_time(dims: Dims, eps: f64) -> Result<f64> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::invalid(format!("saturation time needs eps > 0, got {eps}")));
    }
    let (n, m) = (dims.n() as f64, dims.m() as f64);
    Ok((n + 1.0) * (m * m - 1.0) / (m * (n * m + 1.0) * eps * eps))
}

/// `(tr ρ_R², tr ρ_T²)` of one unitary.
pub fn purity_pair(op: &BipartiteOperator) -> Result<(f64, f64)> {
    let p = crate::measures::purities(op)?;
    Ok((p.x(op.dims()), p.y(op.dims())))
}

/// Precomputed left action of the fixed gate.
struct Stepper {
    gate: BipartiteOperator,
    diagonal: Option<Vec<crate::linalg::c64>>,
}

impl Stepper {
    fn new(gate: BipartiteOperator) -> Self {
        let m = gate.matrix();
        let d = m.rows();
        let is_diag = (0..d).all(|r| (0..d).all(|c| r == c || m[(r, c)] == ZERO));
        let diagonal = is_diag.then(|| (0..d).map(|k| m[(k, k)]).collect());
        Stepper { gate, diagonal }
    }

    /// `U · w`.
    fn apply(&self, w: &BipartiteOperator) -> BipartiteOperator {
        match &self.diagonal {
            Some(phases) => {
                let mut out = w.matrix().clone();
                let d = out.cols();
                for (r, z) in phases.iter().enumerate() {
                    for x in &mut out.data_mut()[r * d..(r + 1) * d] {
                        *x *= z;
                    }
                }
                BipartiteOperator::new(w.dims(), out).expect("same order")
            }
            None => self.gate.compose(w).expect("same dims"),
        }
    }
}

/// Haar locals `(u_A, u_B)` drawn from the streams `(seed, outer, inner, party)`.
fn locals(seed: u64, outer: u64, inner: u64, dims: Dims) -> (CMatrix, CMatrix) {
    let ua = haar_unitary(dims.n(), &mut rng_from(seed, &[outer, inner, party::A]));
    let ub = haar_unitary(dims.m(), &mut rng_from(seed, &[outer, inner, party::B]));
    (ua, ub)
}

/// Runs one realization and hands `W_n` to `visit` for `n = 1..=steps`.
/// `visit` returns `false` to stop early.
pub fn evolve_realization(
    gate: &BipartiteOperator,
    mode: EvolutionMode,
    steps: usize,
    seed: u64,
    trial: u64,
    mut visit: impl FnMut(usize, &BipartiteOperator) -> bool,
) {
    let stepper = Stepper::new(gate.clone());
    let dims = gate.dims();
    let fixed = match mode {
        EvolutionMode::FixedLocals => Some(locals(seed, trial, 0, dims)),
        _ => None,
    };
    let mut w = gate.clone();
    for n in 1..=steps {
        if n > 1 {
            w = match (mode, &fixed) {
                (EvolutionMode::NoLocals, _) => stepper.apply(&w),
                (_, Some((ua, ub))) => stepper.apply(&w.apply_local_left(ua, ub)),
                _ => {
                    let (ua, ub) = locals(seed, trial, n as u64, dims);
                    stepper.apply(&w.apply_local_left(&ua, &ub))
                }
            };
        }
        if !visit(n, &w) {
            break;
        }
    }
}

#[derive(Clone, Copy, Default)]
struct StepStats {
    ep: Welford,
    gt: Welford,
    x: Welford,
    y: Welford,
}

impl StepStats {
    fn merge(&mut self, other: &StepStats) {
        self.ep.merge(&other.ep);
        self.gt.merge(&other.gt);
        self.x.merge(&other.x);
        self.y.merge(&other.y);
    }
}

struct BlockResult {
    stats: Vec<StepStats>,
    used: usize,
    diagnostics: Vec<String>,
}

pub fn evolve_trajectory(cfg: &EvolutionConfig, exec: Exec) -> Result<Trajectory> {
    cfg.validate()?;
    let gate = cfg.build_gate()?;
    evolve_gate(&gate, cfg.mode, cfg.steps, cfg.trials, cfg.seed, exec)
}

/// Trajectory for an already built gate.
pub fn evolve_gate(
    gate: &BipartiteOperator,
    mode: EvolutionMode,
    steps: usize,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<Trajectory> {
    if steps == 0 || trials == 0 {
        return Err(Error::invalid("steps and trials must both be at least 1"));
    }
    gate.check_unitary()?;
    let dims = gate.dims();
    let base = purities_unchecked(gate);
    let (gate_ep, gate_gt) = (base.entangling_power(dims), base.gate_typicality(dims));

    let blocks = trials.div_ceil(BLOCK);
    let results = exec.map(blocks, |b| {
        let mut out = BlockResult {
            stats: vec![StepStats::default(); steps],
            used: 0,
            diagnostics: Vec::new(),
        };
        let mut record: Vec<Purities> = Vec::with_capacity(steps);
        for trial in b * BLOCK..((b + 1) * BLOCK).min(trials) {
            record.clear();
            let mut last = None;
            evolve_realization(gate, mode, steps, seed, trial as u64, |n, w| {
                record.push(purities_unchecked(w));
                if n == steps {
                    last = Some(w.unitarity_deviation());
                }
                true
            });
            let drift = last.unwrap_or(f64::NAN);
            if !(drift < DRIFT_TOL) {
                out.diagnostics.push(format!(
                    "trial {trial}: product drifted from unitarity by {drift:.3e}, dropped"
                ));
                continue;
            }
            out.used += 1;
            for (s, p) in out.stats.iter_mut().zip(&record) {
                s.ep.push(p.entangling_power(dims));
                s.gt.push(p.gate_typicality(dims));
                s.x.push(p.x(dims));
                s.y.push(p.y(dims));
            }
        }
        out
    });

    let mut total = vec![StepStats::default(); steps];
    let mut used = 0;
    let mut diagnostics = Vec::new();
    for block in results {
        for (t, s) in total.iter_mut().zip(&block.stats) {
            t.merge(s);
        }
        used += block.used;
        diagnostics.extend(block.diagnostics);
    }
    if used == 0 {
        return Err(Error::numerical(format!("every trial was dropped: {}", diagnostics.join("; "))));
    }
    let rows = total
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let n = k + 1;
            let (ep, gt, x, y) = (s.ep.estimate(), s.gt.estimate(), s.x.estimate(), s.y.estimate());
            TrajectoryRow {
                n,
                mean_ep: ep.mean,
                stderr_ep: ep.stderr,
                mean_gt: gt.mean,
                stderr_gt: gt.stderr,
                x: x.mean,
                y: y.mean,
                stderr_x: x.stderr,
                stderr_y: y.stderr,
                theory_ep: theory_ep(n, gate_ep, dims),
                theory_gt: theory_gt(n, gate_gt, dims),
            }
        })
        .collect();
    Ok(Trajectory {
        dims,
        gate_ep,
        gate_gt,
        trials_used: used,
        rows,
        diagnostics,
    })
}

/// Monte-Carlo mean of `e_p[U (u_A ⊗ u_B) V]` next to its closed form
/// `e_p(U) + e_p(V) - e_p(U) e_p(V) / ē_p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoGateAverage {
    pub mc: Estimate,
    pub closed_form: f64,
}

pub fn avg_ep_two_gate(
    u: &BipartiteOperator,
    v: &BipartiteOperator,
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<TwoGateAverage> {
    if u.dims() != v.dims() {
        return Err(Error::DimensionMismatch(format!("{} and {}", u.dims(), v.dims())));
    }
    if trials < 2 {
        return Err(Error::invalid("need at least 2 trials"));
    }
    u.check_unitary()?;
    v.check_unitary()?;
    let dims = u.dims();
    let ep_u = purities_unchecked(u).entangling_power(dims);
    let ep_v = purities_unchecked(v).entangling_power(dims);
    let stepper = Stepper::new(u.clone());
    let samples = exec.map(trials, |k| {
        let (ua, ub) = locals(seed, k as u64, 1, dims);
        let w = stepper.apply(&v.apply_local_left(&ua, &ub));
        purities_unchecked(&w).entangling_power(dims)
    });
    Ok(TwoGateAverage {
        mc: Estimate::from_samples(&samples),
        closed_form: ep_u + ep_v - ep_u * ep_v / haar_avg_ep(dims),
    })
}

/// Gate ensembles with closed-form averaged purities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GateEnsemble {
    /// Diagonal gates with phase strength `eps`.
    Diagonal { eps: f64 },
    /// `P ⊗ 1 + (1 - P) ⊗ u_B` with Haar `u_B` and `rank P = rank`.
    Controlled { rank: usize },
}

impl GateEnsemble {
    pub fn sample(&self, dims: Dims, rng: &mut GateRng) -> Result<BipartiteOperator> {
        match *self {
            GateEnsemble::Diagonal { eps } => diagonal_interaction(dims, eps, rng),
            GateEnsemble::Controlled { rank } => {
                if !dims.is_square() {
                    return Err(Error::invalid("controlled ensemble needs n = m"));
                }
                controlled_unitary(dims.n(), rank, &haar_unitary(dims.m(), rng))
            }
        }
    }
}

/// Ensemble means of `tr ρ_R²` and `tr ρ_T²` after one and two steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePurities {
    pub x1: Estimate,
    pub y1: Estimate,
    pub x2: Estimate,
    pub y2: Estimate,
}

/// Averages over `gates` gate realizations, each with `locals` local draws
/// for the second step. Standard errors come from the spread of the
/// per-gate means, so they include gate-to-gate fluctuations.
pub fn ensemble_purities(
    ensemble: GateEnsemble,
    dims: Dims,
    gates: usize,
    locals_per_gate: usize,
    seed: u64,
    exec: Exec,
) -> Result<EnsemblePurities> {
    if gates < 2 || locals_per_gate == 0 {
        return Err(Error::invalid("need at least 2 gates and 1 local draw per gate"));
    }
    let per_gate = exec.map(gates, |g| -> Result<[f64; 4]> {
        let u = ensemble.sample(dims, &mut rng_from(seed, &[g as u64, party::GATE]))?;
        let first = purities_unchecked(&u);
        let stepper = Stepper::new(u.clone());
        let (mut x2, mut y2) = (Welford::default(), Welford::default());
        for l in 0..locals_per_gate {
            let (ua, ub) = locals(seed, g as u64, l as u64, dims);
            let p = purities_unchecked(&stepper.apply(&u.apply_local_left(&ua, &ub)));
            x2.push(p.x(dims));
            y2.push(p.y(dims));
        }
        Ok([first.x(dims), first.y(dims), x2.mean(), y2.mean()])
    });
    let mut acc = [Welford::default(); 4];
    for row in per_gate {
        for (a, v) in acc.iter_mut().zip(row?) {
            a.push(v);
        }
    }
    Ok(EnsemblePurities {
        x1: acc[0].estimate(),
        y1: acc[1].estimate(),
        x2: acc[2].estimate(),
        y2: acc[3].estimate(),
    })
}

/// Closed-form purities of the fully nonlocal (`eps = 1`) diagonal ensemble
/// on `C^N ⊗ C^N`: `(X_1, Y_1, X_2, Y_2)`. `X_2` is the large-`N` form.
pub fn diagonal_purity_formulas(n: usize) -> [f64; 4] {
    let n = n as f64;
    let n2 = n * n;
    let n4 = n2 * n2;
    [
        (2.0 * n - 1.0) / n2,
        1.0 / n2,
        6.0 / (n2 + 1.0),
        2.0 * (n4 + n2 + 1.0) / (n4 * (n + 1.0).powi(2)),
    ]
}

/// Closed-form purities of the controlled-unitary ensemble with rank `N/2`
/// projectors and Haar `u_B` on `C^N ⊗ C^N`: `(X_1, Y_1, X_2, Y_2)`.
pub fn controlled_purity_formulas(n: usize) -> [f64; 4] {
    let n = n as f64;
    let n2 = n * n;
    let n4 = n2 * n2;
    let denom = 4.0 * n2 * (n2 - 1.0).powi(2);
    [
        0.5 + 1.0 / (2.0 * n2),
        1.0 / n2,
        (n4 * n2 + 2.0 * n4 - 6.0 * n2 + 4.0) / denom,
        (5.0 * n4 - 10.0 * n2 + 6.0) / denom,
    ]
}

/// `tr ρ_R²` of one controlled unitary with projector ranks `r` and `N - r`.
pub fn controlled_x1(n: usize, rank: usize, trace_ub: crate::linalg::c64) -> f64 {
    let (n, r1) = (n as f64, rank as f64);
    let r2 = n - r1;
    (r1 * r1 + r2 * r2) / (n * n) + 2.0 * r1 * r2 * trace_ub.norm_sqr() / n.powi(4)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Exact mean of `tr[(U^R U^R†)²]` over diagonal gates of strength `eps`.
pub fn diagonal_reshuffled_purity_mean(dims: Dims, eps: f64) -> f64 {
    let (n, m) = (dims.n() as f64, dims.m() as f64);
    let s4 = sinc(std::f64::consts::PI * eps).powi(4);
    n * m * m + n * (n - 1.0) * (m + m * (m - 1.0) * s4)
}

/// Small-`eps` expansion `N²M² - N(N-1)M² eps²`.
pub fn diagonal_reshuffled_purity_small_eps(dims: Dims, eps: f64) -> f64 {
    let (n, m) = (dims.n() as f64, dims.m() as f64);
    n * n * m * m - n * (n - 1.0) * m * m * eps * eps
}

/// Large-dimension estimate `N²M² sinc⁴(π eps)`.
pub fn diagonal_reshuffled_purity_sinc(dims: Dims, eps: f64) -> f64 {
    let nm = dims.total() as f64;
    nm * nm * sinc(std::f64::consts::PI * eps).powi(4)
}

/// Entangling power of a diagonal gate with the given reshuffled purity
/// (the partially transposed purity of a diagonal unitary is `NM`).
pub fn diagonal_ep_from_purity(dims: Dims, reshuffled: f64) -> f64 {
    Purities {
        reshuffled,
        transposed: dims.total() as f64,
    }
    .entangling_power(dims)
}

/// Exact ensemble mean `N(M-1)(1 - sinc⁴(π eps)) / (M(N+1))`.
pub fn diagonal_ep_mean(dims: Dims, eps: f64) -> f64 {
    diagonal_ep_from_purity(dims, diagonal_reshuffled_purity_mean(dims, eps))
}

/// Leading small-`eps` estimate `N eps² / (N+1)` obtained from
/// [`diagonal_reshuffled_purity_small_eps`].
pub fn diagonal_ep_small_eps(dims: Dims, eps: f64) -> f64 {
    diagonal_ep_from_purity(dims, diagonal_reshuffled_purity_small_eps(dims, eps))
}

/// Slope of `log2(X_n - floor)` against `n`.
pub fn purity_decay_slope(rows: &[TrajectoryRow], floor: f64) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.x - floor).log2()).collect();
    ols_slope(&xs, &ys)
}

/// Slope of `log2 X_n` against `n`.
pub fn raw_purity_decay_slope(rows: &[TrajectoryRow]) -> f64 {
    purity_decay_slope(rows, 0.0)
}

/// Least-squares fit of `mean_ep(n) ≈ asymptote · [1 - (1 - rate)^n]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationFit {
    pub asymptote: f64,
    pub rate: f64,
}

/// Fits the saturation curve to a trajectory. For a fixed rate the best
/// asymptote is linear least squares, so only `ln rate` is searched: a log
/// grid followed by golden-section refinement.
pub fn fit_saturation(rows: &[TrajectoryRow]) -> Result<SaturationFit> {
    if rows.len() < 3 {
        return Err(Error::invalid("a saturation fit needs at least 3 steps"));
    }
    let best_for = |ln_rate: f64| {
        let q = 1.0 - ln_rate.exp();
        let (mut fy, mut ff) = (0.0, 0.0);
        let shape: Vec<f64> = rows.iter().map(|r| 1.0 - q.powi(r.n as i32)).collect();
        for (f, r) in shape.iter().zip(rows) {
            fy += f * r.mean_ep;
            ff += f * f;
        }
        let a = fy / ff;
        let sse: f64 = shape.iter().zip(rows).map(|(f, r)| (r.mean_ep - a * f).powi(2)).sum();
        (sse, a)
    };
    let (lo, hi) = ((1e-8_f64).ln(), (0.999_f64).ln());
    let grid = 400;
    let at = |k: usize| lo + (hi - lo) * k as f64 / grid as f64;
    let k = (0..=grid)
        .min_by(|&i, &j| best_for(at(i)).0.total_cmp(&best_for(at(j)).0))
        .expect("non-empty grid");
    let (mut a, mut b) = (at(k.saturating_sub(1)), at((k + 1).min(grid)));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (c, d) = (b - phi * (b - a), a + phi * (b - a));
        if best_for(c).0 < best_for(d).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let ln_rate = (a + b) / 2.0;
    Ok(SaturationFit {
        asymptote: best_for(ln_rate).1,
        rate: ln_rate.exp(),
    })
}

/// Haar mean of `tr ρ_R²` on `C^n ⊗ C^m`, the level `X_n` settles at.
pub fn haar_reshuffled_purity(dims: Dims) -> f64 {
    let (n, m) = (dims.n() as f64, dims.m() as f64);
    let nm = n * m;
    // invert the e_p / g_t purity relations at the Haar means
    let ep_part = haar_avg_ep(dims) * m * m * (n * n - 1.0);
    let gt_part = haar_avg_gt(dims) * 2.0 * nm * (n + 1.0) * (m - 1.0);
    (nm * nm - (ep_part + gt_part) / 2.0) / (nm * nm)
}
