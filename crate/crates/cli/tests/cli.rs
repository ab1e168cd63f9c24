use std::path::PathBuf;
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

struct Run {
    code: i32,
    out: Option<Value>,
    raw: String,
    stderr: String,
}

fn ovfree(dir: &TempDir, command: &str, input: &str, extra: &[&str]) -> Run {
    let inp: PathBuf = dir.path().join(format!("{command}-in.json"));
    let out: PathBuf = dir.path().join(format!("{command}-out.json"));
    let _ = std::fs::remove_file(&out);
    std::fs::write(&inp, input).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ovfree"))
        .arg(command)
        .arg("--in")
        .arg(&inp)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    let raw = std::fs::read_to_string(&out).unwrap_or_default();
    Run {
        code: o.status.code().unwrap(),
        out: serde_json::from_str(&raw).ok(),
        raw,
        stderr: String::from_utf8_lossy(&o.stderr).into_owned(),
    }
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

/// Scalar moment `m_n` from a distribution report (A = C, so one entry).
fn scalar_moment(dist: &Value, n: usize) -> f64 {
    f(&dist["moments"][n - 1][0][0][0][0])
}

const ID2: &str = "[[1, 0], [0, 1]]";

fn kraus_map(k: usize, ops: &[&str]) -> String {
    format!(r#"{{"k": {k}, "kraus": [{}]}}"#, ops.join(","))
}

fn id_plus_transpose() -> &'static str {
    r#"{"k": 2, "choi": [[2,0,0,1],[0,0,1,0],[0,1,0,0],[1,0,0,2]]}"#
}

fn scalar_cumulants(values: &[f64]) -> String {
    let tensors: Vec<String> = values.iter().map(|c| format!("[[[{c}]]]")).collect();
    format!(r#"{{"k": 1, "cumulants": [{}]}}"#, tensors.join(","))
}

fn pair(dist: &str, map: &str) -> String {
    format!(r#"{{"distribution": {dist}, "map": {map}}}"#)
}

const REALIZATION: &str = r#"{"k": 2, "realization": {"d": 4, "embedding": "tensor-block", "p": 2,
    "X": [[1, 0.5, 0, [0, 1]], [0.5, -1, 0.2, 0], [0, 0.2, 0.3, 0], [[0, -1], 0, 0, 2]],
    "state": [0.3, 0.7]}}"#;

#[test]
fn check_cp_reports() {
    let dir = TempDir::new().unwrap();
    let two_id = kraus_map(2, &["[[1.4142135623730951, 0], [0, 1.4142135623730951]]"]);
    let r = ovfree(&dir, "check-cp", &two_id, &[]);
    assert_eq!(r.code, 0);
    let v = r.out.unwrap();
    assert_eq!(v["eta"]["psd"], json!(true));
    assert_eq!(v["eta_minus_id"]["psd"], json!(true));

    let transpose = r#"{"k": 2, "choi": [[1,0,0,0],[0,0,1,0],[0,1,0,0],[0,0,0,1]]}"#;
    let v = ovfree(&dir, "check-cp", transpose, &[]).out.unwrap();
    assert_eq!(v["eta"]["psd"], json!(false));
    assert!((f(&v["eta"]["min_eigenvalue"]) + 1.0).abs() < 1e-12);

    let spec: ovfree::io::MapSpec = serde_json::from_str(id_plus_transpose()).unwrap();
    let parsed = ovfree::io::map_from_spec(&spec).unwrap();
    let direct = ovfree::cpmaps::CpMap::identity(2)
        .add(&ovfree::cpmaps::CpMap::transpose(2))
        .unwrap();
    assert!(parsed.max_abs_diff(&direct) == 0.0);
    // Choi(id + T) has eigenvalues {3, 1, 1, -1}: neither η nor η - id is CP.
    let v = ovfree(&dir, "check-cp", id_plus_transpose(), &[])
        .out
        .unwrap();
    assert_eq!(v["eta"]["psd"], json!(false));
    assert_eq!(v["eta_minus_id"]["psd"], json!(false));
    assert!((f(&v["eta"]["min_eigenvalue"]) + 1.0).abs() < 1e-12);
}

#[test]
fn convolve_power_scalar_cases() {
    let dir = TempDir::new().unwrap();
    let semicircle = scalar_cumulants(&[0.0, 1.0, 0.0, 0.0]);
    for t in [0.5f64, 2.0, 3.5] {
        let map = kraus_map(1, &[&format!("[[{}]]", t.sqrt())]);
        let v = ovfree(
            &dir,
            "convolve-power",
            &pair(&semicircle, &map),
            &["--order", "4"],
        )
        .out
        .unwrap();
        let d = &v["distribution"];
        assert!((scalar_moment(d, 2) - t).abs() < 1e-10);
        assert!((scalar_moment(d, 4) - 2.0 * t * t).abs() < 1e-10);
    }

    // Bernoulli ⊞ 1/2. Oracle: for centred cumulants,
    // m6 = c6 + 6 c2 c4 + 3 c3² + 5 c2³.
    let lambda: f64 = 0.5;
    let c = [0.0, lambda, 0.0, -lambda, 0.0, 2.0 * lambda];
    let bernoulli = scalar_cumulants(&[0.0, 1.0, 0.0, -1.0, 0.0, 2.0]);
    let map = kraus_map(1, &[&format!("[[{}]]", lambda.sqrt())]);
    let v = ovfree(&dir, "convolve-power", &pair(&bernoulli, &map), &[])
        .out
        .unwrap();
    let d = &v["distribution"];
    let m6 = c[5] + 6.0 * c[1] * c[3] + 3.0 * c[2] * c[2] + 5.0 * c[1].powi(3);
    for (n, want) in [(1, 0.0), (2, 0.5), (3, 0.0), (4, 0.0), (5, 0.0), (6, m6)] {
        assert!((scalar_moment(d, n) - want).abs() < 1e-10, "m{n}");
    }
    for (n, want) in c.iter().enumerate() {
        assert!((f(&d["cumulants"][n][0][0][0][0]) - want).abs() < 1e-10);
    }
}

#[test]
fn convolve_power_identity_echoes_input() {
    let dir = TempDir::new().unwrap();
    let input = pair(REALIZATION, &kraus_map(2, &[ID2]));
    let powered = ovfree(&dir, "convolve-power", &input, &["--order", "3"])
        .out
        .unwrap();
    let moments = &powered["distribution"]["moments"];
    // Oracle: the realized moments, computed by the library directly.
    let spec: ovfree::io::DistSpec = serde_json::from_str(REALIZATION).unwrap();
    let direct = ovfree::io::dist_from_spec(&spec, Some(3)).unwrap();
    let direct = ovfree::io::dist_json(&direct).unwrap();
    let (a, b) = (flatten(moments), flatten(&direct["moments"]));
    assert_eq!(a.len(), b.len());
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-10));
    // Feeding the output back in reproduces it exactly.
    let again = format!(r#"{{"k": 2, "moments": {moments}}}"#);
    let second = ovfree(
        &dir,
        "convolve-power",
        &pair(&again, &kraus_map(2, &[ID2])),
        &[],
    )
    .out
    .unwrap();
    assert_eq!(second["distribution"]["moments"], *moments);
}

fn flatten(v: &Value) -> Vec<f64> {
    match v {
        Value::Array(a) => a.iter().flat_map(flatten).collect(),
        Value::Number(n) => vec![n.as_f64().unwrap()],
        _ => vec![],
    }
}

#[test]
fn convolve_power_dimension_mismatch() {
    let dir = TempDir::new().unwrap();
    let r = ovfree(
        &dir,
        "convolve-power",
        &pair(REALIZATION, &kraus_map(1, &["[[1]]"])),
        &["--order", "2"],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("M_2"), "{}", r.stderr);
}

#[test]
fn positivity_of_bernoulli_powers() {
    let dir = TempDir::new().unwrap();
    let half = scalar_cumulants(&[0.0, 0.5, 0.0, -0.5]);
    let v = ovfree(&dir, "positivity", &half, &["--level", "2"])
        .out
        .unwrap();
    assert_eq!(v["report"]["psd"], json!(false));
    // The 3x3 Hankel matrix of (1, 0, 1/2, 0, 0) has eigenvalues
    // {1/2, (1 ± √2)/2}.
    let want = (1.0 - 2f64.sqrt()) / 2.0;
    assert!((f(&v["report"]["min_eigenvalue"]) - want).abs() < 1e-10);
    let v = ovfree(&dir, "positivity", &half, &["--level", "1"])
        .out
        .unwrap();
    assert_eq!(v["report"]["psd"], json!(true));
    // Too few tensors for the requested level.
    assert_eq!(ovfree(&dir, "positivity", &half, &["--level", "3"]).code, 2);
    // Realizations are computed to the order the level needs.
    let v = ovfree(&dir, "positivity", REALIZATION, &["--level", "2"])
        .out
        .unwrap();
    assert_eq!(v["report"]["psd"], json!(true));
    assert_eq!(v["order"], json!(4));
}

#[test]
fn verify_realization_paths() {
    let dir = TempDir::new().unwrap();
    let psi = kraus_map(2, &[ID2, "[[0.5, 0.3], [0.1, 0.2]]"]);
    let r = ovfree(
        &dir,
        "verify-realization",
        &pair(REALIZATION, &psi),
        &["--order", "3"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = r.out.unwrap();
    assert_eq!(v["pass"], json!(true));
    assert_eq!(v["depth"], json!(5));
    assert!(f(&v["max_deviation"]) < 1e-8);

    let r = ovfree(
        &dir,
        "verify-realization",
        &pair(REALIZATION, &kraus_map(2, &[ID2])),
        &["--order", "3"],
    );
    assert_eq!(r.code, 0);
    assert_eq!(r.out.unwrap()["pass"], json!(true));

    let r = ovfree(
        &dir,
        "verify-realization",
        &pair(REALIZATION, &psi),
        &["--order", "7"],
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("1..=6"), "{}", r.stderr);

    let r = ovfree(
        &dir,
        "verify-realization",
        &pair(REALIZATION, &psi),
        &["--order", "3", "--depth", "3"],
    );
    assert_eq!(r.code, 2);

    let r = ovfree(
        &dir,
        "verify-realization",
        &pair(REALIZATION, id_plus_transpose()),
        &[],
    );
    assert_eq!(r.code, 3);
    assert!(r.stderr.contains("counterexample"));
    let v = r.out.unwrap();
    assert_eq!(v["eta_minus_id"]["psd"], json!(false));
    assert!(v["eta_minus_id"]["witness"].is_array());
}

#[test]
fn counterexample_reports() {
    let dir = TempDir::new().unwrap();
    let three = kraus_map(2, &["[[1.7320508075688772, 0], [0, 1.7320508075688772]]"]);
    let v = ovfree(&dir, "counterexample", &three, &[]).out.unwrap();
    assert_eq!(v["verdict"], json!("positivity preserved"));
    assert_eq!(v["lambda"], Value::Null);

    let v = ovfree(&dir, "counterexample", id_plus_transpose(), &[])
        .out
        .unwrap();
    assert_eq!(v["verdict"], json!("counterexample"));
    assert!(f(&v["lambda"]) < 1.0);
    assert!(f(&v["witness"]["phi_eta_a_minus_a"]) < 0.0);
    assert!(f(&v["nonpositivity"]["min_eigenvalue"]) < 0.0);

    let scalar = kraus_map(1, &[&format!("[[{}]]", 0.9f64.sqrt())]);
    let v = ovfree(&dir, "counterexample", &scalar, &[]).out.unwrap();
    assert!((f(&v["lambda"]) - 0.9).abs() < 1e-10);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let psi = kraus_map(2, &[ID2, "[[0.5, 0.3], [0.1, 0.2]]"]);
    let cases = [
        ("check-cp", id_plus_transpose().to_string(), vec![]),
        ("counterexample", id_plus_transpose().to_string(), vec![]),
        (
            "convolve-power",
            pair(REALIZATION, &psi),
            vec!["--order", "3"],
        ),
        (
            "verify-realization",
            pair(REALIZATION, &psi),
            vec!["--order", "3"],
        ),
        ("positivity", REALIZATION.to_string(), vec!["--level", "2"]),
    ];
    for (cmd, input, extra) in &cases {
        let a = ovfree(&dir, cmd, input, extra).raw;
        let b = ovfree(&dir, cmd, input, extra).raw;
        assert!(!a.is_empty(), "{cmd}");
        assert_eq!(a, b, "{cmd}");
    }
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    for (cmd, input) in [
        ("check-cp", "{not json"),
        ("check-cp", r#"{"k": 2}"#),
        ("counterexample", r#"{"k": 2, "kraus": [[[1]]]}"#),
        ("positivity", r#"{"k": 1}"#),
    ] {
        let r = ovfree(&dir, cmd, input, &[]);
        assert_eq!(r.code, 2, "{cmd} {input}");
        assert!(r.stderr.starts_with("ovfree: "), "{}", r.stderr);
        assert!(r.out.is_none());
    }
    let r = ovfree(&dir, "invert-everything", "{}", &[]);
    assert_eq!(r.code, 2);
    let missing = Command::new(env!("CARGO_BIN_EXE_ovfree"))
        .args(["check-cp", "--in", "/nonexistent/input.json", "--out"])
        .arg(dir.path().join("x.json"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));
}
