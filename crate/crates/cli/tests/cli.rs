//! End-to-end tests of the `droplet` binary: exit codes, output schemas,
//! reference values, and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn droplet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_droplet"))
        .args(args)
        .output()
        .expect("failed to launch the droplet binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is valid UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is valid UTF-8")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "unexpected exit status; stderr:\n{}",
        stderr(out)
    );
}

fn read_json(path: &Path) -> serde_json::Value {
    let raw = std::fs::read_to_string(path).expect("output file exists");
    serde_json::from_str(&raw).expect("output file is valid JSON")
}

fn number(v: &serde_json::Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} is a number in {v}"))
}

/// Parses one CSV column (by zero-based index) from below a mandatory header.
fn column(csv: &str, header: &str, index: usize) -> Vec<f64> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(header), "header line mismatch");
    lines
        .map(|l| {
            l.split(',')
                .nth(index)
                .expect("row has the column")
                .parse::<f64>()
                .expect("numeric cell")
        })
        .collect()
}

#[test]
fn similarity_critical_writes_profile_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("profile.csv");
    let out = droplet(&[
        "similarity",
        "--lambda",
        "2.5",
        "--critical",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let etas = column(&csv, "eta,H,Hp,K", 0);
    assert!(etas.len() > 1000, "profile is densely sampled");
    assert!(etas.windows(2).all(|w| w[1] > w[0]));

    let sidecar = read_json(&dir.path().join("profile.json"));
    assert!((number(&sidecar, "kappa0") - 3.00428).abs() < 1e-3);
    assert_eq!(sidecar["classification"], "ZeroAngleCandidate");
    assert!((number(&sidecar, "eta_f") - 1.28882).abs() < 5e-3);
    assert!((number(&sidecar, "I") - 2.34984).abs() < 5e-3);
    assert!(number(&sidecar, "Hp_at_eta_i") < 0.0);
}

#[test]
fn similarity_subcritical_curvature_is_classified() {
    let out = droplet(&["similarity", "--lambda", "2.5", "--kappa0", "2", "--format", "json"]);
    assert_exit(&out, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["classification"], "Subcritical");
    assert_eq!(doc["eta_f"], serde_json::Value::Null);
    assert!(!doc["samples"].as_array().unwrap().is_empty());
}

#[test]
fn similarity_rejects_lambda_at_most_one_for_critical_solves() {
    let out = droplet(&["similarity", "--lambda", "0.5", "--critical"]);
    assert_exit(&out, 2);
    assert!(stderr(&out).contains("lambda"), "stderr names the parameter");
}

#[test]
fn similarity_requires_a_curvature_mode() {
    assert_exit(&droplet(&["similarity", "--lambda", "2.5"]), 2);
    let both = droplet(&["similarity", "--lambda", "2.5", "--kappa0", "2", "--critical"]);
    assert_exit(&both, 2);
}

#[test]
fn table_single_row_matches_the_reference_curvature() {
    let out = droplet(&["table", "--lambdas", "2.5"]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    let kappas = column(&text, "lambda,kappa_lambda,eta_f,I,S_lambda,Q_lambda", 1);
    assert_eq!(kappas.len(), 1);
    assert!((kappas[0] - 3.00428).abs() < 1e-3);
}

#[test]
fn table_reports_failed_rows_and_exits_nonzero() {
    let out = droplet(&["table", "--lambdas", "2.0,0.5", "--format", "json"]);
    assert_exit(&out, 1);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = doc.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!((number(&rows[0], "kappa_lambda") - 3.29562).abs() < 1e-3);
    assert_eq!(rows[1]["lambda"], 0.5);
    assert!(rows[1]["error"].as_str().unwrap().contains("lambda"));
}

#[test]
fn table_rejects_an_empty_lambda_list() {
    assert_exit(&droplet(&["table", "--lambdas", ""]), 2);
}

#[test]
fn table_output_is_deterministic_and_thread_invariant() {
    let args = ["table", "--lambdas", "1.5,2.5"];
    let a = droplet(&args);
    let b = droplet(&args);
    assert_exit(&a, 0);
    assert_eq!(a.stdout, b.stdout, "repeat runs are byte-identical");

    let serial = Command::new(env!("CARGO_BIN_EXE_droplet"))
        .args(args)
        .env("POWERLAW_DROPLET_THREADS", "1")
        .output()
        .unwrap();
    assert_exit(&serial, 0);
    assert_eq!(a.stdout, serial.stdout, "thread cap does not change output");

    let bad = Command::new(env!("CARGO_BIN_EXE_droplet"))
        .args(args)
        .env("POWERLAW_DROPLET_THREADS", "zero")
        .output()
        .unwrap();
    assert_exit(&bad, 2);
}

#[test]
fn spread_reproduces_the_unit_parameter_row() {
    let out = droplet(&[
        "spread", "--lambda", "2", "--t-start", "1", "--t-end", "100", "--t-points", "3",
    ]);
    assert_exit(&out, 0);
    let text = stdout(&out);
    let header = "t,r_f,tan_theta,theta_deg";
    let ts = column(&text, header, 0);
    let rfs = column(&text, header, 1);
    let tans = column(&text, header, 2);
    assert_eq!(ts.len(), 3);
    // Endpoints are included exactly.
    assert_eq!(ts[0], 1.0);
    assert_eq!(ts[2], 100.0);
    // Unit volume and unit γ/m at t = 1 reduce the laws to their prefactors.
    assert!((rfs[0] - 1.05262).abs() < 1e-4);
    assert!((tans[0] - 0.951946).abs() < 1e-4);
}

#[test]
fn spread_doubling_the_volume_rescales_the_radius_column() {
    let base = droplet(&["spread", "--lambda", "2", "--t-start", "1", "--t-end", "10", "--t-points", "4"]);
    let doubled = droplet(&[
        "spread", "--lambda", "2", "--volume", "2", "--t-start", "1", "--t-end", "10",
        "--t-points", "4",
    ]);
    assert_exit(&base, 0);
    assert_exit(&doubled, 0);
    let header = "t,r_f,tan_theta,theta_deg";
    let r1 = column(&stdout(&base), header, 1);
    let r2 = column(&stdout(&doubled), header, 1);
    // r_f ∝ V^{(2λ+1)/(7λ+3)}; λ = 2 gives exponent 5/17.
    let factor = 2f64.powf(5.0 / 17.0);
    for (a, b) in r1.iter().zip(&r2) {
        assert!((b / a - factor).abs() < 1e-10);
    }
}

#[test]
fn spread_rejects_nonpositive_physical_parameters() {
    let out = droplet(&["spread", "--lambda", "2", "--volume", "-1"]);
    assert_exit(&out, 2);
    let out = droplet(&["spread", "--lambda", "2", "--gamma", "0"]);
    assert_exit(&out, 2);
    let out = droplet(&["spread", "--lambda", "2", "--t-start", "0"]);
    assert_exit(&out, 2);
}

#[test]
fn pde_writes_front_profile_and_summary_files() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("run");
    let out = droplet(&[
        "pde", "--lambda", "2", "--grid-n", "64", "--domain-R", "6", "--t-end", "1.0",
        "--out", base.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);

    let front = std::fs::read_to_string(dir.path().join("run.front.csv")).unwrap();
    let ts = column(&front, "t,r_front", 0);
    let rs = column(&front, "t,r_front", 1);
    assert!(ts.len() > 10);
    assert!(ts.windows(2).all(|w| w[1] > w[0]), "sample times increase");
    assert!(rs.windows(2).all(|w| w[1] >= w[0]), "front never recedes");

    let profile = std::fs::read_to_string(dir.path().join("run.profile.csv")).unwrap();
    let hs = column(&profile, "r,h", 1);
    assert_eq!(hs.len(), 64);
    assert!(hs.iter().all(|&h| h >= 0.0));

    let summary = read_json(&dir.path().join("run.summary.json"));
    assert!(number(&summary, "mass_drift") < 1e-10);
    assert!(summary["beta_hat"].is_number());
    assert_eq!(summary["deviation"], serde_json::Value::Null);
}

#[test]
fn pde_without_an_output_base_requires_json() {
    assert_exit(&droplet(&["pde", "--lambda", "2", "--grid-n", "64", "--t-end", "1.0"]), 2);
    let out = droplet(&[
        "pde", "--lambda", "2", "--grid-n", "64", "--t-end", "1e-2", "--format", "json",
    ]);
    assert_exit(&out, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(number(&doc, "mass_drift") < 1e-10);
    assert!(!doc["front"].as_array().unwrap().is_empty());
    assert_eq!(doc["profile"].as_array().unwrap().len(), 64);
}

#[test]
fn pde_rejects_shear_thickening_indices() {
    let out = droplet(&[
        "pde", "--lambda", "0.8", "--grid-n", "64", "--t-end", "1.0", "--format", "json",
    ]);
    assert_exit(&out, 2);
}

/// Long-run comparison against the critical similarity profile; runtime is
/// minutes, so the test is opt-in (`cargo test -- --ignored`).
#[test]
#[ignore]
fn pde_late_time_shape_matches_the_similarity_profile() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("deep");
    let out = droplet(&[
        "pde", "--lambda", "2.5", "--grid-n", "128", "--domain-R", "12", "--t-end", "6.64e17",
        "--compare-similarity", "--out", base.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let summary = read_json(&dir.path().join("deep.summary.json"));
    assert!(number(&summary, "deviation") < 5e-2);
    assert!(number(&summary, "mass_drift") < 1e-10);
}
