use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const CHAIN: &str = r#"{"p_u":[1.0],"p_v_given_u":[[0.5,0.5]],"xi":[[1,0],[0,1]],
"w_y":[[0.9,0.1],[0.1,0.9]],"w_z":[[0.7,0.3],[0.3,0.7]]}"#;

const REPETITION: &str = r#"{
  "layout": {"q": 2, "k": [1], "b1_dim": 0, "b2_dim": 1},
  "codebook": {"n": 3, "u_size": 1, "v_size": 2, "s0_count": 1, "b1_count": 1, "b2_count": 2,
               "table_c": [[0,0,0]], "table_p": [[0,0,0],[1,1,1]]},
  "mixer": {"q": 2, "dim": 1, "matrix": [[1]], "offset": [0]},
  "construction": "second",
  "chain": "chain.json"
}"#;

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("chain.json"), CHAIN).unwrap();
    std::fs::write(dir.path().join("rep.json"), REPETITION).unwrap();
    std::fs::write(
        dir.path().join("tiny.json"),
        r#"{"p_a":[0.75,0.25],"w":[[0.9,0.1],[0.1,0.9]],"p":[0.5,0.5]}"#,
    )
    .unwrap();
    dir
}

fn smc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smc"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn csv_rows(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn thm1_row_and_manifest() {
    let dir = setup();
    let out = smc(
        dir.path(),
        &["resolve-check", "--mode", "thm1", "--spec", "tiny.json", "--rho", "1.0"],
    );
    assert_eq!(out.status.code(), Some(0));
    let (h, rows) = csv_rows(&out);
    let lhs: f64 = rows[0][column(&h, "lhs")].parse().unwrap();
    let rhs: f64 = rows[0][column(&h, "rhs")].parse().unwrap();
    assert!((lhs - 1.4).abs() < 1e-12 && (rhs - 2.025).abs() < 1e-12);
    assert_eq!(rows[0][column(&h, "holds")], "true");

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("resolve-check.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "resolve-check");
    assert!(manifest["inputs"]["tiny.json"].is_object());
    // every numeric cell round-trips bit for bit
    for (j, cell) in rows[0].iter().enumerate() {
        if let Ok(x) = cell.parse::<f64>() {
            let m = manifest["rows"][0][j].as_f64().unwrap();
            assert_eq!(m.to_bits(), x.to_bits(), "column {}", h[j]);
        }
    }
}

#[test]
fn exponent_columns() {
    let dir = setup();
    let out = smc(
        dir.path(),
        &[
            "exponent",
            "--chain",
            "chain.json",
            "--rp",
            "0.3",
            "--rc",
            "0.2",
            "--rates",
            "0.2,0.3",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let (h, rows) = csv_rows(&out);
    assert_eq!(h, ["set", "E_b_nats", "E_e_nats", "E_plus_nats", "E_minus_nats"]);
    assert_eq!(rows.len(), 1);
    let out = smc(
        dir.path(),
        &[
            "exponent",
            "--chain",
            "chain.json",
            "--rp",
            "0.3",
            "--rc",
            "0.2",
            "--rates",
            "0.2,0.1,0.2",
        ],
    );
    assert_eq!(csv_rows(&out).1.len(), 3);
    let out = smc(
        dir.path(),
        &[
            "exponent",
            "--chain",
            "chain.json",
            "--rp",
            "0.3",
            "--rc",
            "0.2",
            "--rates",
            "0.2,0.2",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_spec_names_the_key() {
    let dir = setup();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"p_u":[1.0],"p_v_given_u":[[1]],"xi":[[1]],"w_y":[[1]],"w_z":7}"#,
    )
    .unwrap();
    let out = smc(
        dir.path(),
        &[
            "exponent", "--chain", "bad.json", "--rp", "0.1", "--rc", "0", "--rates", "0.1",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("w_z"), "{err}");

    std::fs::write(dir.path().join("broken.json"), "{ not json").unwrap();
    let out = smc(
        dir.path(),
        &["resolve-check", "--mode", "thm1", "--spec", "broken.json"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cap_exceeded_exits_3() {
    let dir = setup();
    let out = smc(dir.path(), &["leakage", "--code", "rep.json", "--cap", "4"]);
    assert_eq!(out.status.code(), Some(3));
    let out = smc(dir.path(), &["leakage", "--code", "rep.json", "--dry-run"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(csv_rows(&out).1[0][0], "16");
}

#[test]
fn leakage_of_repetition_code() {
    let dir = setup();
    let out = smc(dir.path(), &["leakage", "--code", "rep.json"]);
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = csv_rows(&out);
    let leak: f64 = rows[0][1].parse().unwrap();
    assert!(leak > 0.0 && leak < 2f64.ln());
    let bits = smc(dir.path(), &["leakage", "--code", "rep.json", "--bits"]);
    let (h, rows) = csv_rows(&bits);
    assert_eq!(h[1], "leakage_bits");
    let b: f64 = rows[0][1].parse().unwrap();
    assert!((b - leak / 2f64.ln()).abs() < 1e-15);
}

#[test]
fn simulate_is_replayable_and_matches_exact() {
    let dir = setup();
    let args = [
        "simulate", "--code", "rep.json", "--trials", "20000", "--seed", "7", "--exact",
    ];
    let a = smc(dir.path(), &args);
    let b = smc(dir.path(), &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let (h, rows) = csv_rows(&a);
    let p: f64 = rows[0][column(&h, "p_b")].parse().unwrap();
    let exact: f64 = rows[0][column(&h, "exact_p_b")].parse().unwrap();
    assert!((exact - 0.028).abs() < 1e-12);
    assert!((p - exact).abs() < 4.0 * (exact * (1.0 - exact) / 20000.0).sqrt());
}

#[test]
fn capacity_degraded_and_sample() {
    let dir = setup();
    std::fs::write(
        dir.path().join("pair.json"),
        r#"{"w_y":[[0.9,0.1],[0.1,0.9]],"w_z":[[0.8,0.2],[0.2,0.8]]}"#,
    )
    .unwrap();
    let out = smc(dir.path(), &["capacity", "--channels", "pair.json"]);
    let c: f64 = csv_rows(&out).1[0][0].parse().unwrap();
    assert!((c - 0.175319).abs() < 1e-4);
    let out = smc(
        dir.path(),
        &[
            "capacity",
            "--channels",
            "pair.json",
            "--mode",
            "sample",
            "--samples",
            "50",
            "--t",
            "2",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let (h, rows) = csv_rows(&out);
    assert!(h.contains(&"floor_1+2_nats".to_string()));
    assert!(!rows.is_empty());
}

#[test]
fn construct_infeasible_exits_4() {
    let dir = setup();
    std::fs::write(dir.path().join("gen.txt"), "1 1 1\n").unwrap();
    let out = smc(
        dir.path(),
        &[
            "construct",
            "--chain",
            "chain.json",
            "--generator",
            "gen.txt",
            "--t",
            "1",
            "--targets",
            "1e-12",
            "--eps2",
            "0.5",
        ],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn construct_then_measure() {
    let dir = setup();
    std::fs::write(
        dir.path().join("quiet.json"),
        r#"{"p_u":[1.0],"p_v_given_u":[[0.5,0.5]],"xi":[[1,0],[0,1]],
            "w_y":[[1,0],[0,1]],"w_z":[[0.55,0.45],[0.45,0.55]]}"#,
    )
    .unwrap();
    std::fs::write(
        dir.path().join("gen.txt"),
        (0..8)
            .map(|i| {
                (0..8)
                    .map(|j| if i == j { "1" } else { "0" })
                    .collect::<Vec<_>>()
                    .join(" ")
                    + "\n"
            })
            .collect::<String>(),
    )
    .unwrap();
    let out = smc(
        dir.path(),
        &[
            "construct",
            "--chain",
            "quiet.json",
            "--generator",
            "gen.txt",
            "--t",
            "2",
            "--targets",
            "0.5",
            "--eps2",
            "0.5",
            "--out",
            "code.json",
            "--seed",
            "3",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let slack: f64 = r[column(&h, "slack_nats")].parse().unwrap();
        assert!(slack >= 0.0);
    }
    let out = smc(dir.path(), &["leakage", "--code", "code.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn lem4_check_through_cli() {
    let dir = setup();
    let code = r#"{
      "layout": {"q": 2, "k": [1], "b1_dim": 1, "b2_dim": 0},
      "codebook": {"n": 2, "u_size": 1, "v_size": 2, "s0_count": 1, "b1_count": 2, "b2_count": 1,
                   "table_c": [[0,0],[0,0]], "table_p": [[0,1],[1,1]]},
      "mixer": {"q": 2, "dim": 1, "matrix": [[1]], "offset": [0]},
      "construction": "first",
      "chain": "chain.json"
    }"#;
    let spec = format!(r#"{{"code": {code}, "source": {{"shape": [1, 2], "probs": [0.8, 0.2]}}}}"#);
    std::fs::write(dir.path().join("lem4.json"), spec).unwrap();
    let out = smc(
        dir.path(),
        &[
            "resolve-check",
            "--mode",
            "lem4",
            "--spec",
            "lem4.json",
            "--rho-grid",
            "0.25:1:4",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (h, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[column(&h, "holds")] == "true"));
}
