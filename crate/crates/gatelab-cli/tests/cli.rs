use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use gatelab::bipartite::{BipartiteOperator, Dims};
use gatelab::io::write_matrix_file;
use gatelab::random::{haar_unitary, rng_from};
use gatelab::GateMeasures;

fn gatelab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gatelab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> Output {
    let o = gatelab(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column_mean(rows: &[Vec<String>], col: usize) -> f64 {
    rows.iter().map(|r| r[col].parse::<f64>().unwrap()).sum::<f64>() / rows.len() as f64
}

#[test]
fn measure_reproduces_two_qubit_table_values() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["measure", "cnot"], dir.path());
    let v = json(&dir.path().join("measure.json"));
    assert!((v["ep"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((v["gt"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["is_dual"], Value::Bool(false));
    assert_eq!(v["schmidt_spectrum"].as_array().unwrap().len(), 4);

    ok(&["measure", "swap:n=2"], dir.path());
    let v = json(&dir.path().join("measure.json"));
    assert!(v["ep"].as_f64().unwrap().abs() < 1e-12);
    assert!((v["gt"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn measure_of_a_saved_gate_matches_the_library_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let dims = Dims::new(2, 3).unwrap();
    let op = BipartiteOperator::unitary(dims, haar_unitary(6, &mut rng_from(8, &[]))).unwrap();
    let path = dir.path().join("gate.json");
    write_matrix_file(&path, &op).unwrap();
    let want = GateMeasures::of(&op).unwrap();

    let spec = format!("file:{}", path.display());
    ok(&["measure", &spec], dir.path());
    let v = json(&dir.path().join("measure.json"));
    assert_eq!(v["ep"].as_f64().unwrap().to_bits(), want.ep.to_bits());
    assert_eq!(v["gt"].as_f64().unwrap().to_bits(), want.gt.to_bits());
    assert_eq!(v["E"].as_f64().unwrap().to_bits(), want.e.to_bits());
    assert_eq!(v["is_dual"], Value::Null);

    ok(&["measure", "--input", path.to_str().unwrap()], dir.path());
    let again = json(&dir.path().join("measure.json"));
    assert_eq!(again["ep"], v["ep"]);
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gatelab(&["measure", "fswap:n=2"], dir.path()).status.code(), Some(2));
    assert_eq!(gatelab(&["measure", "nosuchgate"], dir.path()).status.code(), Some(2));
    assert_eq!(gatelab(&["measure", "haar:dims=2x2"], dir.path()).status.code(), Some(2));
    assert_eq!(gatelab(&["thermalize", "--gate", "cnot", "--dims", "2x2", "--steps", "3", "--trials", "2"], dir.path()).status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dims":[2,2],"re":[[1,1,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],"im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#).unwrap();
    let o = gatelab(&["measure", "--input", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));

    let o = gatelab(&["measure", "cnot", "--dims", "3x3"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn scatter_means_match_haar_averages() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["scatter", "--dims", "2x2", "--samples", "10000", "--seed", "3"], dir.path());
    let rows = csv_rows(&dir.path().join("scatter.csv"));
    assert_eq!(rows.len(), 10_000);
    assert!((column_mean(&rows, 0) - 0.6).abs() < 0.01);
    assert!((column_mean(&rows, 1) - 0.5).abs() < 0.01);
    let curves = csv_rows(&dir.path().join("boundary.csv"));
    assert!(curves.len() > 100);

    ok(&["scatter", "--dims", "3x3", "--samples", "10000", "--seed", "4"], dir.path());
    let rows = csv_rows(&dir.path().join("scatter.csv"));
    assert!((column_mean(&rows, 0) - 0.8).abs() < 0.01);
}

#[test]
fn empty_scatter_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["scatter", "--samples", "0"], dir.path());
    assert_eq!(std::fs::read_to_string(dir.path().join("scatter.csv")).unwrap(), "ep,gt\n");
}

#[test]
fn thermalize_powers_of_a_fractional_swap() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["thermalize", "--mode", "no-locals", "--gate", "fswap:t=0.3,n=2", "--dims", "2x2", "--steps", "10", "--trials", "1"];
    ok(&args, dir.path());
    let rows = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 10);
    for r in rows {
        let n: f64 = r[0].parse().unwrap();
        let ep: f64 = r[1].parse().unwrap();
        assert!((ep - (0.6 * n).sin().powi(2) / 2.0).abs() < 1e-12);
    }
}

#[test]
fn single_step_trajectory_is_the_gate() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["thermalize", "--gate", "cnot", "--dims", "2x2", "--steps", "1", "--trials", "50", "--seed", "1"], dir.path());
    let rows = csv_rows(&dir.path().join("trajectory.csv"));
    let ep: f64 = rows[0][1].parse().unwrap();
    assert_eq!(ep, 2.0 / 3.0);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["thermalize", "--gate", "diag:eps=0.2", "--dims", "2x3", "--steps", "30", "--trials", "400", "--seed", "5"];
    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    let mut three = args.to_vec();
    three.extend(["--threads", "3"]);
    ok(&one, a.path());
    ok(&three, b.path());
    assert_eq!(
        std::fs::read(a.path().join("trajectory.csv")).unwrap(),
        std::fs::read(b.path().join("trajectory.csv")).unwrap()
    );
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    ok(&["thermalize", "--gate", "diag:eps=0.1", "--dims", "2x3", "--steps", "20", "--trials", "100", "--seed", "11", "--format", "json"], &run);
    let manifest = run.join("manifest.json");
    let m = json(&manifest);
    assert_eq!(m["command"], "thermalize");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["params"]["steps"], 20);

    let again = dir.path().join("again");
    let o = ok(&["replay", manifest.to_str().unwrap()], &again);
    assert!(String::from_utf8_lossy(&o.stdout).contains("bitwise"));
    assert_eq!(
        std::fs::read(run.join("trajectory.json")).unwrap(),
        std::fs::read(again.join("trajectory.json")).unwrap()
    );

    // tampering with a recorded output hash must be caught
    let mut tampered = m.clone();
    tampered["outputs"][0]["sha256"] = Value::String("0".repeat(64));
    let bad = dir.path().join("tampered.json");
    std::fs::write(&bad, serde_json::to_string(&tampered).unwrap()).unwrap();
    let o = gatelab(&["replay", bad.to_str().unwrap()], &dir.path().join("third"));
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn spectra_of_the_bare_swap_lie_on_the_unit_circle() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["spectra", "--gate", "swap", "--dims", "3x3", "--steps", "0", "--mode", "no-locals"], dir.path());
    let rows = csv_rows(&dir.path().join("eigenvalues.csv"));
    assert_eq!(rows.len(), 2 * 9);
    for r in rows.iter().filter(|r| r[0] == "reshuffled") {
        let (re, im): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!((re.hypot(im) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn spectra_summary_lists_every_step_and_kind() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["spectra", "--gate", "diag:eps=1", "--dims", "6x6", "--steps", "3,1,2", "--seed", "2"], dir.path());
    let summary = json(&dir.path().join("spectra-summary.json"));
    let entries = summary["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 6);
    assert_eq!(entries[0]["step"], 1);
    assert_eq!(entries[0]["histogram"]["rule"], "freedman-diaconis");
    let singular = csv_rows(&dir.path().join("singular.csv"));
    assert_eq!(singular.len(), 6 * 36);
}

#[test]
fn quick_verify_passes_and_rejects_corrupt_gate_files() {
    let dir = tempfile::tempdir().unwrap();
    let start = std::time::Instant::now();
    let o = ok(&["verify", "--quick"], dir.path());
    assert!(start.elapsed().as_secs() < 60);
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let report = json(&dir.path().join("verify.json"));
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));

    let corrupt = dir.path().join("corrupt-gate.json");
    std::fs::write(&corrupt, "{\"dims\": [2, 2], \"re\": [[1, 0]").unwrap();
    let o = gatelab(&["verify", "--quick", "--gate-file", corrupt.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupt-gate.json"));
}
