use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_detmax");

const THREE: &str = r#"{
  "schema_version": 1,
  "dimension": 2,
  "vectors": [[1, 0], [3, 0], [0, 1]],
  "matroid": {"kind": "partition", "blocks": [[0, 1], [2]]}
}"#;

fn detmax(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("DETMAX_LOG")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn run_three_vector_fixture_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "three.json", THREE);
    let out = detmax(&["run", "--instance", &inst, "--brute-force"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["selected"], serde_json::json!([1, 2]));
    assert!((r["log_det"].as_f64().unwrap() - 2.0 * 3f64.ln()).abs() < 1e-9);
    assert_eq!(r["iterations"], 1);
    assert_eq!(r["certificate"]["certified"], true);
    assert_eq!(r["oracle"]["opt_set"], serde_json::json!([1, 2]));
    assert_eq!(r["oracle"]["within_bound"], true);
    assert_eq!(r["exchange_history"][0]["stage"], 1);
}

#[test]
fn trace_lines_on_stderr_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "three.json", THREE);
    let report = dir.path().join("report.json");
    let out = detmax(&[
        "run",
        "--instance",
        &inst,
        "--trace",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    let line = err.lines().find(|l| l.starts_with("iter=")).unwrap();
    assert!(line.starts_with("iter=1 stage=1 hops=2 dlogvol=1.0986"), "{line}");
    let r: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(r["selected"], serde_json::json!([1, 2]));
}

#[test]
fn hadamard_with_start_basis_does_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("h.json");
    let g = detmax(&["gen", "hadamard", "--k", "2", "--out", inst.to_str().unwrap()]);
    assert_eq!(g.status.code(), Some(0));
    let out = detmax(&[
        "run",
        "--instance",
        inst.to_str().unwrap(),
        "--start-basis",
        "0,1,2,3",
        "--brute-force",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["iterations"], 0);
    assert_eq!(r["certificate"]["certified"], true);
    let gap = r["oracle"]["log_det_gap"].as_f64().unwrap();
    assert!((gap - 4.0 * 4f64.ln()).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{ not json");
    let out = detmax(&["run", "--instance", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());

    let infeasible = write(
        dir.path(),
        "inf.json",
        r#"{"schema_version":1,"dimension":2,"vectors":[[1,0],[2,0]],
            "matroid":{"kind":"partition","blocks":[[0],[1]]}}"#,
    );
    assert_eq!(detmax(&["run", "--instance", &infeasible]).status.code(), Some(3));

    // one exchange is available; a cap of one is fine, so force a second one
    let two = write(
        dir.path(),
        "two.json",
        r#"{"schema_version":1,"dimension":2,"vectors":[[1,0],[3,0],[0,1],[0,7]],
            "matroid":{"kind":"partition","blocks":[[0,1],[2,3]]}}"#,
    );
    let out = detmax(&["run", "--instance", &two, "--max-iters", "1"]);
    assert_eq!(out.status.code(), Some(4));
    let r = stdout_json(&out);
    assert_eq!(r["termination"], "iteration_cap");
    assert_eq!(r["certificate"]["certified"], false);

    let out = detmax(&["run", "--instance", &two, "--start-basis", "0,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_reports_named_violations() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(dir.path(), "ok.json", THREE);
    let out = detmax(&["validate", "--instance", &ok]);
    assert_eq!(out.status.code(), Some(0));
    let d = stdout_json(&out);
    assert_eq!(d["ok"], true);
    assert_eq!(d["rank"], 2);

    let overlap = write(
        dir.path(),
        "overlap.json",
        &THREE.replace("[[0, 1], [2]]", "[[0, 1], [1, 2]]"),
    );
    let out = detmax(&["validate", "--instance", &overlap]);
    assert_eq!(out.status.code(), Some(2));
    let d = stdout_json(&out);
    assert!(d["violations"][0].as_str().unwrap().contains("overlapping partition blocks"));

    let too_big = write(
        dir.path(),
        "big.json",
        &THREE.replace(r#"{"kind": "partition", "blocks": [[0, 1], [2]]}"#, r#"{"kind": "uniform", "rank": 3}"#),
    );
    let d = stdout_json(&detmax(&["validate", "--instance", &too_big]));
    assert!(d["violations"]
        .as_array()
        .unwrap()
        .iter()
        .any(|v| v.as_str().unwrap().contains("exceeds dimension")));
}

#[test]
fn gen_is_deterministic() {
    let args = [
        "gen",
        "random-partition",
        "--d",
        "3",
        "--blocks",
        "3",
        "--per-block",
        "3",
        "--seed",
        "7",
    ];
    let a = detmax(&args);
    let b = detmax(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let f = stdout_json(&a);
    assert_eq!(f["vectors"].as_array().unwrap().len(), 9);

    let g = detmax(&["gen", "graphic", "--shape", "path", "-n", "4"]);
    let f = stdout_json(&g);
    assert_eq!(f["matroid"]["kind"], "graphic");
    assert_eq!(f["dimension"], 3);
}

#[test]
fn gen_validate_run_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grids: Vec<Vec<&str>> = vec![
        vec!["hadamard", "--k", "1"],
        vec!["hadamard", "--k", "3"],
        vec!["random-partition", "--d", "2", "--blocks", "2", "--per-block", "3", "--seed", "1"],
        vec!["random-partition", "--d", "4", "--blocks", "3", "--per-block", "2", "--seed", "2"],
        vec!["random-uniform", "--d", "3", "-n", "6", "--rank", "2", "--seed", "3"],
        vec!["random-uniform", "--d", "3", "-n", "5", "--seed", "4"],
        vec!["graphic", "--shape", "complete", "-n", "4", "--seed", "5"],
        vec!["graphic", "--shape", "random", "-n", "5", "--edges", "6", "--seed", "6"],
    ];
    for (i, args) in grids.iter().enumerate() {
        let path = dir.path().join(format!("g{i}.json"));
        let p = path.to_str().unwrap();
        let mut full = vec!["gen"];
        full.extend(args);
        full.extend(["--out", p]);
        assert_eq!(detmax(&full).status.code(), Some(0), "{args:?}");
        assert_eq!(detmax(&["validate", "--instance", p]).status.code(), Some(0), "{args:?}");
        let out = detmax(&["run", "--instance", p, "--brute-force"]);
        // random draws may lack a nonzero-volume basis
        match out.status.code() {
            Some(0) => {
                let r = stdout_json(&out);
                assert_eq!(r["oracle"]["within_bound"], true, "{args:?}");
                let opt = r["oracle"]["opt_log_det"].as_f64().unwrap();
                assert!(r["log_det"].as_f64().unwrap() <= opt + 1e-9);
            }
            Some(3) => {}
            code => panic!("{args:?}: exit {code:?}: {}", String::from_utf8_lossy(&out.stderr)),
        }
    }
}

#[test]
fn report_log_det_matches_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    let g = detmax(&[
        "gen", "random-partition", "--d", "4", "--blocks", "4", "--per-block", "3", "--seed", "11",
        "--out", p.to_str().unwrap(),
    ]);
    assert_eq!(g.status.code(), Some(0));
    let out = detmax(&["run", "--instance", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    let f: Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    // 4x4 determinant of the selected rows by cofactor expansion
    let rows: Vec<Vec<f64>> = r["selected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| {
            f["vectors"][i.as_u64().unwrap() as usize]
                .as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_f64().unwrap())
                .collect()
        })
        .collect();
    fn det(m: &[Vec<f64>]) -> f64 {
        if m.len() == 1 {
            return m[0][0];
        }
        (0..m.len())
            .map(|j| {
                let minor: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| [&row[..j], &row[j + 1..]].concat())
                    .collect();
                (if j % 2 == 0 { 1.0 } else { -1.0 }) * m[0][j] * det(&minor)
            })
            .sum()
    }
    let expected = (det(&rows) * det(&rows)).ln();
    assert!((r["log_det"].as_f64().unwrap() - expected).abs() < 1e-9);
}
