use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use slipflow::simulator::read_field_dump;
use slipflow::EnergyLedger;
use tempfile::TempDir;

fn slipflow(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slipflow"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SLIPFLOW_OUT")
        .output()
        .expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) -> Output {
    let o = slipflow(out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    o
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect()
}

fn header(path: &Path) -> Vec<String> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.headers().unwrap().iter().map(String::from).collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn manifest(dir: &Path) -> String {
    fs::read_to_string(dir.join("manifest.txt")).unwrap()
}

#[test]
fn critical_viscosity_reports_both_values() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["critical-viscosity", "--k0", "1", "--k1", "1,0"]);
    let p = t.path().join("critical_viscosity.csv");
    assert_eq!(
        header(&p),
        ["k0", "k1", "closed_form", "mu_c", "variational", "variational_gap", "maximizer", "maximizer_b", "maximizer_a"]
    );
    let r = rows(&p);
    assert_eq!(r.len(), 2);
    assert!((f(&r[0][2]) - 1.0 / 6.0).abs() < 1e-15);
    assert!((f(&r[0][3]) - 0.5).abs() < 1e-15);
    assert!((f(&r[0][4]) - 0.5).abs() < 1e-10);
    assert_eq!(r[0][6], "parabola");
    assert!((f(&r[1][3]) - 1.0 / 3.0).abs() < 1e-15);
    assert!((f(&r[1][7]) - 2.0).abs() < 1e-12);
    assert!(manifest(t.path()).contains("n = 128"));
}

#[test]
fn dispersion_column_is_decreasing_and_matches_oracle() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["dispersion", "--k0", "1", "--k1", "1", "--mu", "0.05", "--xi2", "0:0.1:5"]);
    let p = t.path().join("dispersion.csv");
    assert_eq!(
        header(&p),
        ["xi2", "lambda", "method", "dirichlet", "robin", "ode", "momentum", "divergence", "det_residual"]
    );
    let r = rows(&p);
    let disc: Vec<&Vec<String>> = r.iter().filter(|x| x[2] == "discrete").collect();
    let oracle: Vec<&Vec<String>> = r.iter().filter(|x| x[2] == "dispersion").collect();
    assert_eq!(disc.len(), 51);
    // no determinant row at ξ² = 0
    assert_eq!(oracle.len(), 50);
    assert_eq!(f(&disc[50][0]), 5.0);
    for w in disc.windows(2) {
        assert!(f(&w[1][1]) < f(&w[0][1]));
    }
    // ξ_c² is near 100 here, so the whole range grows
    assert!(disc.iter().all(|x| f(&x[1]) > 0.0));
    for (d, o) in disc[1..].iter().zip(&oracle) {
        assert_eq!(d[0], o[0]);
        let (a, b) = (f(&d[1]), f(&o[1]));
        assert!((a - b).abs() <= 1e-6 * b.abs(), "{a} vs {b}");
    }
}

#[test]
fn dispersion_crosses_zero_once_below_critical_viscosity() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["dispersion", "--k0", "1", "--k1", "0", "--mu", "0.1", "--xi2", "0:2:40", "--method", "discrete"]);
    let lam: Vec<f64> = rows(&t.path().join("dispersion.csv")).iter().map(|x| f(&x[1])).collect();
    let changes = lam.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    assert_eq!(changes, 1);
    // ξ_c² ≈ 24.96 lies between the samples 24 and 26
    assert!(lam[12] > 0.0 && lam[13] < 0.0);
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["dispersion", "--k0", "2", "--k1", "-0.5", "--mu", "0.3", "--xi2", "0.5:0.5:4"];
    ok(a.path(), &args);
    ok(b.path(), &args);
    let x = fs::read(a.path().join("dispersion.csv")).unwrap();
    let y = fs::read(b.path().join("dispersion.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn sweep_is_deterministic_across_thread_counts() {
    let args = ["sweep", "--k0", "-1,1", "--k1", "0,1", "--mu", "0.2,0.6"];
    let run = |threads: &str| {
        let t = TempDir::new().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_slipflow"))
            .arg("--out")
            .arg(t.path())
            .args(args)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        fs::read(t.path().join("sweep.csv")).unwrap()
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn sweep_classifies_the_documented_cells() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["sweep", "--k0", "-1", "--k1", "-1", "--mu", "0.1,0.5,2"]);
    let p = t.path().join("sweep.csv");
    assert_eq!(header(&p), ["k0", "k1", "mu", "mu_c", "stable_flag", "xi_c2", "lambda_max", "error"]);
    for r in rows(&p) {
        assert_eq!(r[3], "0");
        assert_eq!(r[4], "stable");
        assert_eq!(r[5], "");
        assert!(f(&r[6]) < 0.0);
    }

    let t = TempDir::new().unwrap();
    ok(t.path(), &["sweep", "--k0", "1", "--k1", "0", "--mu", "0.1,0.5"]);
    let r = rows(&t.path().join("sweep.csv"));
    assert_eq!(r[0][4], "unstable");
    assert!((f(&r[0][5]) - 24.958852935489).abs() < 1e-8, "{}", r[0][5]);
    assert!(f(&r[0][6]) > 0.0);
    assert_eq!(r[1][4], "stable");
    assert_eq!(r[1][5], "");
    assert!(f(&r[1][6]) < 0.0);
}

#[test]
fn sweep_keeps_input_order_and_records_cell_errors() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["sweep", "--k0", "1", "--k1", "0", "--mu", "0.5:-0.25:0"]);
    let r = rows(&t.path().join("sweep.csv"));
    let mus: Vec<&str> = r.iter().map(|x| x[2].as_str()).collect();
    assert_eq!(mus, ["0.5", "0.25", "0"]);
    assert!(r[0][7].is_empty() && r[1][7].is_empty());
    assert!(r[2][7].contains("viscosity"), "{:?}", r[2]);
    assert_eq!(r[2][4], "");
}

#[test]
fn critical_frequency_fixed_point() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["critical-frequency", "--k0", "1", "--k1", "1", "--mu", "0.4"]);
    let r = rows(&t.path().join("critical_frequency.csv"));
    assert_eq!(r[0][4], "unstable");
    let xc = f(&r[0][5]);
    assert!((xc - 1.4699909100859).abs() < 1e-9, "{xc}");
    assert!((xc - f(&r[0][6])).abs() < 1e-10);
    assert!(f(&r[0][8]).abs() < 1e-6);
    assert!(!rows(&t.path().join("bracket.csv")).is_empty());

    let t = TempDir::new().unwrap();
    ok(t.path(), &["critical-frequency", "--k0", "1", "--k1", "0", "--mu", "0.5"]);
    let r = rows(&t.path().join("critical_frequency.csv"));
    assert_eq!(r[0][4], "stable");
    assert_eq!(r[0][5], "");
    assert!(!t.path().join("bracket.csv").exists());
}

#[test]
fn synthesize_writes_fields_on_the_sample_grid() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["synthesize", "--k0", "1", "--k1", "0", "--mu", "0.1", "--t", "0,0.5", "--x", "0:1:2", "--n", "64"]);
    let fields = rows(&t.path().join("fields.csv"));
    assert_eq!(fields.len(), 2 * 3 * 64);
    let syn = rows(&t.path().join("synthesis.csv"));
    assert_eq!(syn.len(), 2);
    assert!(f(&syn[1][1]) > f(&syn[0][1]));
    assert!(f(&syn[0][3]) < 1e-8);
    let m = manifest(t.path());
    // default bump at (ξ_c²/2, ξ_c²/4) is echoed
    assert!(m.contains("center = 12.479"), "{m}");
    assert!(m.contains("amplitude = 1"));
}

#[test]
fn simulate_writes_ledger_and_dumps() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["simulate", "--k0", "1", "--k1", "0", "--mu", "0.5", "--center", "1", "--horizon", "0.1", "--dump-every", "10"]);
    let p = t.path().join("ledger.csv");
    assert_eq!(header(&p), EnergyLedger::COLUMNS);
    let ledger = rows(&p);
    let first = f(&ledger[0][4]);
    let last = f(&ledger.last().unwrap()[4]);
    assert!(last < first);
    assert!(ledger.iter().all(|r| f(&r[7]) < 1e-6));
    let dump = fs::File::open(t.path().join("fields/final.txt")).unwrap();
    let st = read_field_dump(BufReader::new(dump)).unwrap();
    assert!((st.l2_norm() - last).abs() <= 1e-12 * last);
    assert!(t.path().join("fields/step_000010.txt").exists());
    let m = manifest(t.path());
    for key in ["dt = ", "steps = ", "halfwidth = 0.5", "mode = nonlinear", "n = 64", "points = 3"] {
        assert!(m.contains(key), "missing {key:?} in {m}");
    }

    // restart from the dump
    let u = TempDir::new().unwrap();
    let from = t.path().join("fields/final.txt");
    ok(u.path(), &["simulate", "--k0", "1", "--k1", "0", "--mu", "0.5", "--from", from.to_str().unwrap(), "--horizon", "0.05"]);
    let again = rows(&u.path().join("ledger.csv"));
    assert!((f(&again[0][4]) - last).abs() <= 1e-12 * last);
}

#[test]
fn decay_and_escape_summaries() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["decay", "--k0", "1", "--k1", "0", "--mu", "1", "--amplitude", "0.05", "--horizon", "1"]);
    let r = rows(&t.path().join("decay.csv"));
    let cap = f(&r[0][3]);
    assert!(cap < 0.0);
    assert!(f(&r[0][0]) <= 0.9 * cap);
    assert_eq!(r[0][5], "true");

    let t = TempDir::new().unwrap();
    ok(t.path(), &[
        "escape", "--k0", "1", "--k1", "1", "--mu", "0.4", "--center", "0.3", "--halfwidth", "0.05", "--delta", "1e-6,1e-7",
        "--epsilon", "1e-3", "--horizon", "20",
    ]);
    let r = rows(&t.path().join("escape.csv"));
    assert_eq!(r.len(), 2);
    let (t1, t2) = (f(&r[0][2]), f(&r[1][2]));
    let fit = f(&r[1][5]);
    assert!(((t2 - t1) - 10f64.ln() / fit).abs() < 0.05 * (t2 - t1), "{t1} {t2} {fit}");
    let hist = rows(&t.path().join("history.csv"));
    assert!(hist.iter().any(|h| h[0] == "1e-6") && hist.iter().any(|h| h[0] == "1e-7"));
}

#[test]
fn config_errors_exit_with_two_and_a_record() {
    let t = TempDir::new().unwrap();
    let o = slipflow(t.path(), &["dispersion", "--k0", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    let rec = err.lines().last().unwrap();
    assert!(rec.starts_with("{\"status\":\"error\",\"kind\":\"config\",\"code\":2"), "{rec}");
    assert!(rec.contains("--mu") && rec.contains("--xi2"));

    let o = slipflow(t.path(), &["dispersion", "--k0", "1", "--k1", "1", "--mu", "-1", "--xi2", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let rec = fs::read_to_string(t.path().join("error.json")).unwrap();
    assert!(rec.contains("viscosity"));
    assert!(!t.path().join("manifest.txt").exists());

    for args in [
        &["dispersion", "--k0", "1", "--k1", "1", "--mu", "1", "--xi2", "0:1"][..],
        &["dispersion", "--k0", "1", "--k1", "1", "--mu", "1", "--xi2", "1", "--n", "16"][..],
        &["decay", "--k0", "1", "--k1", "0", "--mu", "0.1", "--horizon", "1"][..],
        &["escape", "--k0", "1", "--k1", "0", "--mu", "0.5", "--delta", "1e-6", "--epsilon", "1e-3", "--horizon", "1"][..],
    ] {
        assert_eq!(slipflow(t.path(), args).status.code(), Some(2), "{args:?}");
    }

    // a later success clears the stale record
    ok(t.path(), &["critical-viscosity", "--k0", "1", "--k1", "0"]);
    assert!(!t.path().join("error.json").exists());
}

#[test]
fn numerical_failures_exit_with_three() {
    let t = TempDir::new().unwrap();
    let o = slipflow(
        t.path(),
        &["simulate", "--k0", "1", "--k1", "0", "--mu", "0.5", "--center", "1", "--amplitude", "1e4", "--dt", "0.1", "--horizon", "1"],
    );
    assert_eq!(o.status.code(), Some(3));
    let rec = fs::read_to_string(t.path().join("error.json")).unwrap();
    assert!(rec.contains("\"kind\":\"numerical\""), "{rec}");
}

#[test]
fn output_directory_from_environment() {
    let t = TempDir::new().unwrap();
    let dir = t.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_slipflow"))
        .args(["critical-viscosity", "--k0", "1", "--k1", "0"])
        .env("SLIPFLOW_OUT", &dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.join("critical_viscosity.csv").exists());
}

#[test]
fn run_file_matches_flags() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cfg = a.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# phase diagram\ncommand = sweep\nk0 = 1\nk1 = -1:1:0\nmu = 0.1\nout = {}\n",
            b.path().join("viafile").display()
        ),
    )
    .unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_slipflow")).arg("run").arg(&cfg).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    ok(a.path(), &["sweep", "--k0", "1", "--k1", "-1:1:0", "--mu", "0.1"]);
    assert_eq!(
        fs::read(b.path().join("viafile/sweep.csv")).unwrap(),
        fs::read(a.path().join("sweep.csv")).unwrap()
    );

    fs::write(&cfg, "k0 = 1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_slipflow")).arg("run").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_prints_a_table() {
    let t = TempDir::new().unwrap();
    let o = ok(t.path(), &["verify"]);
    let text = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).collect();
    assert!(lines.len() >= 10);
    assert!(lines.iter().all(|l| l.starts_with("PASS")), "{text}");
    assert_eq!(rows(&t.path().join("verify.csv")).len(), lines.len());
}
