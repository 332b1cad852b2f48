use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use gatelab::bipartite::schmidt_spectrum;
use gatelab::gates::{cartan_ep_gt, haar_gate, parse_gate_spec, GateSpec, WeylEdge};
use gatelab::io::{self, LARGE_MATRIX_ORDER};
use gatelab::measures::{haar_avg_ep, haar_avg_gt, purities_unchecked};
use gatelab::random::party;
use gatelab::spectra::{self, Histogram, SpectralKind, SpectralSample, SpectralSummary};
use gatelab::thermal::{self, EvolutionConfig, EvolutionMode};
use gatelab::{rng_from, BipartiteOperator, Dims, Exec, GateMeasures};

use crate::manifest::Produced;
use crate::{CliError, Format, Global, MeasureArgs, ScatterArgs, SpectraArgs, ThermalizeArgs, VerifyArgs, Which};

/// Seed used by `verify` when none is given; the suite is deterministic
/// either way.
const VERIFY_SEED: u64 = 0;

const EDGE_POINTS: usize = 101;

struct Sink {
    path: std::path::PathBuf,
    w: BufWriter<File>,
}

impl Sink {
    fn create(out: &Path, name: &str) -> Result<Self, CliError> {
        let path = out.join(name);
        let file = File::create(&path).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        })?;
        Ok(Sink {
            path,
            w: BufWriter::new(file),
        })
    }

    fn with(mut self, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
        f(&mut self.w)
            .and_then(|_| self.w.flush())
            .map_err(|source| CliError::Output { path: self.path, source })
    }
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), CliError> {
    Sink::create(out, name)?.with(|w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn warn_large(dims: Dims) {
    if dims.total() > LARGE_MATRIX_ORDER {
        eprintln!(
            "warning: matrices of order {} (above {LARGE_MATRIX_ORDER}) are slow and memory hungry",
            dims.total()
        );
    }
}

fn require_seed(global: &Global, why: &str) -> Result<u64, CliError> {
    global
        .seed
        .ok_or_else(|| CliError::Usage(format!("--seed is required: {why}")))
}

/// Seed for evolutions: required when locals are drawn or the gate is random
/// without its own seed.
fn evolution_seed(global: &Global, spec: &GateSpec, mode: EvolutionMode) -> Result<u64, CliError> {
    if mode != EvolutionMode::NoLocals {
        require_seed(global, "the evolution draws random local unitaries")
    } else if spec.needs_seed() {
        require_seed(global, "the gate is random and its spec has no seed")
    } else {
        Ok(global.seed.unwrap_or(0))
    }
}

#[derive(Serialize)]
struct MeasureReport {
    gate: String,
    dims: Dims,
    #[serde(flatten)]
    measures: GateMeasures,
    schmidt_spectrum: Vec<f64>,
}

pub fn measure(args: &MeasureArgs, global: &Global, out: &Path) -> Result<Produced, CliError> {
    let spec = match (&args.gate, &args.input) {
        (Some(text), _) => parse_gate_spec(text)?,
        (None, Some(path)) => GateSpec::File { path: path.clone() },
        (None, None) => return Err(CliError::Usage("give a gate spec or --input".into())),
    };
    let fallback = if spec.needs_seed() {
        Some(thermal::gate_seed(require_seed(global, "the gate is random and its spec has no seed")?))
    } else {
        None
    };
    let op = spec.build(args.dims, fallback)?;
    warn_large(op.dims());
    let report = MeasureReport {
        gate: spec.render(),
        dims: op.dims(),
        measures: GateMeasures::of(&op)?,
        schmidt_spectrum: schmidt_spectrum(&op)?.values,
    };
    let name = match global.format.unwrap_or(Format::Json) {
        Format::Json => {
            write_json(out, "measure.json", &report)?;
            "measure.json"
        }
        Format::Csv => {
            Sink::create(out, "measure.csv")?.with(|w| {
                let m = &report.measures;
                let flag = |b: Option<bool>| b.map_or(String::new(), |b| b.to_string());
                writeln!(w, "gate,n,m,E,E_swapped,ep,gt,is_dual,is_two_unitary")?;
                writeln!(
                    w,
                    "\"{}\",{},{},{},{},{},{},{},{}",
                    report.gate,
                    report.dims.n(),
                    report.dims.m(),
                    io::fmt_float(m.e),
                    io::fmt_float(m.e_swapped),
                    io::fmt_float(m.ep),
                    io::fmt_float(m.gt),
                    flag(m.is_dual),
                    flag(m.is_two_unitary)
                )
            })?;
            "measure.csv"
        }
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(Produced::files(vec![name.into()]))
}

fn boundary_curves() -> Vec<(String, Vec<(f64, f64)>)> {
    WeylEdge::ALL
        .iter()
        .map(|edge| {
            let pts = (0..EDGE_POINTS)
                .map(|k| cartan_ep_gt(edge.point(k as f64 / (EDGE_POINTS - 1) as f64)))
                .collect();
            (edge.name().to_string(), pts)
        })
        .collect()
}

pub fn scatter(args: &ScatterArgs, global: &Global, out: &Path) -> Result<Produced, CliError> {
    let dims = args.dims;
    warn_large(dims);
    let points = if args.samples == 0 {
        Vec::new()
    } else {
        let seed = require_seed(global, "scatter draws Haar-random gates")?;
        Exec::Parallel.map(args.samples, |k| {
            let u = haar_gate(dims, &mut rng_from(seed, &[k as u64, party::GATE]));
            let p = purities_unchecked(&u);
            (p.entangling_power(dims), p.gate_typicality(dims))
        })
    };
    let mut files = Vec::new();
    match global.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            Sink::create(out, "scatter.csv")?.with(|w| io::write_points_csv(w, &points))?;
            files.push("scatter.csv".to_string());
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Points<'a> {
                dims: Dims,
                points: &'a [(f64, f64)],
            }
            write_json(out, "scatter.json", &Points { dims, points: &points })?;
            files.push("scatter.json".to_string());
        }
    }
    if dims == Dims::square(2).expect("valid") {
        Sink::create(out, "boundary.csv")?.with(|w| io::write_curves_csv(w, &boundary_curves()))?;
        files.push("boundary.csv".to_string());
    }
    if !points.is_empty() {
        let k = points.len() as f64;
        let ep = points.iter().map(|p| p.0).sum::<f64>() / k;
        let gt = points.iter().map(|p| p.1).sum::<f64>() / k;
        eprintln!(
            "mean ep {ep:.5} (Haar {:.5}), mean gt {gt:.5} (Haar {:.5}) over {} gates",
            haar_avg_ep(dims),
            haar_avg_gt(dims),
            points.len()
        );
    }
    Ok(Produced::files(files))
}

pub fn thermalize(args: &ThermalizeArgs, global: &Global, out: &Path) -> Result<Produced, CliError> {
    let spec = parse_gate_spec(&args.gate)?;
    let cfg = EvolutionConfig {
        seed: evolution_seed(global, &spec, args.mode)?,
        gate: spec,
        dims: args.dims,
        steps: args.steps,
        trials: args.trials,
        mode: args.mode,
    };
    warn_large(cfg.dims);
    let traj = thermal::evolve_trajectory(&cfg, Exec::Parallel)?;
    for d in &traj.diagnostics {
        eprintln!("warning: {d}");
    }
    let name = match global.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            Sink::create(out, "trajectory.csv")?.with(|w| io::write_trajectory_csv(w, &traj))?;
            "trajectory.csv"
        }
        Format::Json => {
            write_json(out, "trajectory.json", &traj)?;
            "trajectory.json"
        }
    };
    if let Some(last) = traj.rows.last() {
        eprintln!(
            "gate ep {:.5}; step {}: mean ep {:.5} ± {:.5} (theory {:.5}); {} of {} trials used",
            traj.gate_ep, last.n, last.mean_ep, last.stderr_ep, last.theory_ep, traj.trials_used, cfg.trials
        );
    }
    Ok(Produced::files(vec![name.into()]))
}

#[derive(Serialize)]
struct SpectraEntry {
    #[serde(flatten)]
    summary: SpectralSummary,
    histogram: Histogram,
}

#[derive(Serialize)]
struct SpectraReport {
    gate: String,
    dims: Dims,
    mode: EvolutionMode,
    entries: Vec<SpectraEntry>,
}

fn spectral_kinds(which: Which, dims: Dims) -> Result<Vec<SpectralKind>, CliError> {
    match which {
        Which::Reshuffled if !dims.is_square() => Err(CliError::Lib(gatelab::Error::DimensionMismatch(format!(
            "the reshuffled matrix needs n = m, got {dims}"
        )))),
        Which::Reshuffled => Ok(vec![SpectralKind::Reshuffled]),
        Which::PartialTranspose => Ok(vec![SpectralKind::PartialTranspose]),
        Which::Both if !dims.is_square() => {
            eprintln!("warning: dims {dims} are not square; only the partial transpose is analysed");
            Ok(vec![SpectralKind::PartialTranspose])
        }
        Which::Both => Ok(SpectralKind::BOTH.to_vec()),
    }
}

pub fn spectra(args: &SpectraArgs, global: &Global, out: &Path) -> Result<Produced, CliError> {
    let spec = parse_gate_spec(&args.gate)?;
    let mut steps = args.steps.clone();
    steps.sort_unstable();
    steps.dedup();
    let last = *steps.last().expect("clap requires at least one step");
    let kinds = spectral_kinds(args.which, args.dims)?;
    let cfg = EvolutionConfig {
        seed: evolution_seed(global, &spec, args.mode)?,
        gate: spec,
        dims: args.dims,
        steps: last.max(1),
        trials: 1,
        mode: args.mode,
    };
    warn_large(cfg.dims);
    let gate = cfg.build_gate()?;

    let sample_all = |w: &BipartiteOperator, step: usize| -> gatelab::Result<Vec<SpectralSample>> {
        kinds.iter().map(|&k| spectra::spectral_sample(w, k, step)).collect()
    };
    let mut samples = Vec::new();
    if steps[0] == 0 {
        samples.extend(sample_all(&gate, 0)?);
    }
    let mut failure = None;
    if last > 0 {
        thermal::evolve_realization(&gate, cfg.mode, last, cfg.seed, 0, |n, w| {
            if steps.binary_search(&n).is_err() {
                return true;
            }
            match sample_all(w, n) {
                Ok(s) => {
                    samples.extend(s);
                    true
                }
                Err(e) => {
                    failure = Some(e);
                    false
                }
            }
        });
    }
    if let Some(e) = failure {
        return Err(e.into());
    }

    Sink::create(out, "eigenvalues.csv")?.with(|w| io::write_eigenvalues_csv(w, &samples))?;
    Sink::create(out, "singular.csv")?.with(|w| io::write_singular_csv(w, &samples))?;
    let report = SpectraReport {
        gate: cfg.gate.render(),
        dims: cfg.dims,
        mode: cfg.mode,
        entries: samples
            .iter()
            .map(|s| SpectraEntry {
                summary: s.summary(),
                histogram: spectra::histogram(&s.scaled_sq_singular),
            })
            .collect(),
    };
    write_json(out, "spectra-summary.json", &report)?;
    for s in &samples {
        eprintln!("{:<17} step {:>3}: KS vs MP {:.4}, radial KS {:.4}", s.kind, s.step, s.ks_mp, s.ks_radial);
    }
    Ok(Produced::files(vec![
        "eigenvalues.csv".into(),
        "singular.csv".into(),
        "spectra-summary.json".into(),
    ]))
}

#[derive(Serialize)]
struct VerifyCheck<'a> {
    name: &'a str,
    passed: bool,
    detail: &'a str,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    quick: bool,
    seed: u64,
    gate_files: Vec<String>,
    checks: Vec<VerifyCheck<'a>>,
}

pub fn verify(args: &VerifyArgs, global: &Global, out: &Path) -> Result<Produced, CliError> {
    for path in &args.gate_files {
        let op = io::read_matrix_file(path)?;
        println!("ok    gate file {} ({})", path.display(), op.dims());
    }
    let seed = global.seed.unwrap_or(VERIFY_SEED);
    let report = gatelab::verify::run_suite(args.quick, seed, Exec::Parallel);
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status}  {:<22} {:>7.2}s  {}", c.name, c.seconds, c.detail);
    }
    // timings stay out of the file so that replays compare equal
    let output = VerifyOutput {
        quick: report.quick,
        seed,
        gate_files: args.gate_files.iter().map(|p| p.display().to_string()).collect(),
        checks: report
            .checks
            .iter()
            .map(|c| VerifyCheck {
                name: &c.name,
                passed: c.passed,
                detail: &c.detail,
            })
            .collect(),
    };
    write_json(out, "verify.json", &output)?;
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    Ok(Produced {
        files: vec!["verify.json".into()],
        failure: (failed > 0).then(|| format!("{failed} of {} checks failed", report.checks.len())),
    })
}
