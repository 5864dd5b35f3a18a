use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_treeoda"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn corpus(dir: &TempDir, name: &str, trees: &[(&str, &[(u32, f64)])]) -> PathBuf {
    let trees: Vec<Value> = trees
        .iter()
        .map(|(id, nodes)| {
            let nodes: Vec<Value> = nodes
                .iter()
                .map(|(k, a)| serde_json::json!({"k": k, "a": [a]}))
                .collect();
            serde_json::json!({"id": id, "nodes": nodes})
        })
        .collect();
    let doc = serde_json::json!({"arity": 1, "slots": ["x"], "trees": trees});
    let path = dir.path().join(name);
    fs::write(&path, doc.to_string()).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_reports_structure_and_errors() {
    let dir = TempDir::new().unwrap();
    let ok = corpus(
        &dir,
        "ok.json",
        &[("a", &[(1, 0.0), (2, 1.0), (5, 2.0)]), ("b", &[(1, 0.5)])],
    );
    let out = run(&["validate", arg(&ok)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = json_of(&out);
    assert_eq!(doc["trees"][0]["nodes"], 3);
    assert_eq!(doc["trees"][0]["levels"], 3);
    assert_eq!(doc["trees"][1]["levels"], 1);

    let orphan = corpus(
        &dir,
        "orphan.json",
        &[("fine", &[(1, 0.0)]), ("broken", &[(1, 0.0), (6, 1.0)])],
    );
    let out = run(&["validate", arg(&orphan)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(
        msg.contains("\"broken\"") && msg.contains("node 6"),
        "{msg}"
    );

    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    let out = run(&["validate", arg(&empty)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("syntax error"));

    let out = run(&["validate", arg(&ok), "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn center_outputs() {
    let dir = TempDir::new().unwrap();
    let path = corpus(
        &dir,
        "c.json",
        &[
            ("a", &[(1, 0.0)]),
            ("b", &[(1, 0.0), (2, 0.0)]),
            ("c", &[(1, 0.0), (2, 0.0), (4, 0.0)]),
        ],
    );
    let doc = json_of(&run(&["center", arg(&path)]));
    assert_eq!(doc["minimal_median"], serde_json::json!([1, 2]));

    let tied = corpus(
        &dir,
        "t.json",
        &[("a", &[(1, 0.0)]), ("b", &[(1, 0.0), (2, 0.2)])],
    );
    let doc = json_of(&run(&["center", arg(&tied)]));
    let medians = doc["median_family"]["medians"].as_array().unwrap();
    assert_eq!(medians.len(), 2);
    assert_eq!(medians[0]["nodes"], serde_json::json!([1]));
    assert_eq!(medians[0]["minimal"], true);
    assert_eq!(medians[1]["minimal"], false);

    let single = corpus(&dir, "s.json", &[("only", &[(1, 0.3), (3, -0.2)])]);
    let doc = json_of(&run(&["center", arg(&single)]));
    let expected = serde_json::json!([{"k": 1, "a": [0.3]}, {"k": 3, "a": [-0.2]}]);
    assert_eq!(doc["median_mean"], expected);
    assert_eq!(doc["average_support"], expected);
    assert_eq!(doc["minimal_median"], serde_json::json!([1, 3]));
    assert_eq!(
        doc["median_family"]["medians"][0]["nodes"],
        serde_json::json!([1, 3])
    );
}

#[test]
fn distance_worked_pair() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("pair.json");
    fs::write(
        &path,
        r#"{"arity":2,"slots":["x","y"],"trees":[
            {"id":"s","nodes":[{"k":1,"a":[0.25,0.0]}]},
            {"id":"t","nodes":[{"k":1,"a":[0.25,0.0]},{"k":2,"a":[0.1,0.2]}]}]}"#,
    )
    .unwrap();
    let doc = json_of(&run(&["distance", arg(&path), "s", "t"]));
    assert_eq!(doc["d_i"], 1);
    assert!((doc["f_delta"].as_f64().unwrap() - 0.079_056_941_504_209_48).abs() < 1e-15);
    assert!((doc["delta"].as_f64().unwrap() - 1.079_056_941_504_209_5).abs() < 1e-15);
    assert!((doc["variation"].as_f64().unwrap() - 1.00625).abs() < 1e-15);

    let doc = json_of(&run(&["distance", arg(&path), "t", "t"]));
    for key in ["d_i", "f_delta", "delta", "variation"] {
        assert_eq!(doc[key].as_f64(), Some(0.0), "{key}");
    }

    let out = run(&["distance", arg(&path), "s", "missing"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("UnknownId"));

    let out = run(&["distance", arg(&path), "s", "t", "--weights", "file"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_is_reproducible_and_validated() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = run(&["synth", "--seed", "11", "--flip", "0.5", "--out", arg(p)]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(
        fs::read(dir.path().join("a.meta.json")).unwrap(),
        fs::read(dir.path().join("b.meta.json")).unwrap()
    );
    let meta: Value =
        serde_json::from_slice(&fs::read(dir.path().join("a.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["groups"][0].as_array().unwrap().len(), 6);
    assert_eq!(meta["groups"][1].as_array().unwrap().len(), 6);

    let out = run(&["synth", "--flip", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("invalid synthetic specification"));
}

#[test]
fn analyze_recovers_planted_structure() {
    let dir = TempDir::new().unwrap();
    let chain = dir.path().join("chain.json");
    let out = run(&[
        "synth",
        "--plan",
        "left-chain",
        "--depth",
        "3",
        "--flip",
        "0",
        "--seed",
        "3",
        "--out",
        arg(&chain),
    ]);
    assert!(out.status.success());
    let meta: Value =
        serde_json::from_slice(&fs::read(dir.path().join("chain.meta.json")).unwrap()).unwrap();
    let doc = json_of(&run(&["analyze", arg(&chain)]));
    assert_eq!(doc["structure"]["chain"], meta["chain"]);

    let flip = dir.path().join("flip.json");
    run(&["synth", "--seed", "5", "--out", arg(&flip)]);
    let meta: Value =
        serde_json::from_slice(&fs::read(dir.path().join("flip.meta.json")).unwrap()).unwrap();
    let doc = json_of(&run(&["analyze", arg(&flip)]));
    let lambdas: Vec<f64> = doc["attribute"]["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["lambda"].as_f64().unwrap())
        .collect();
    let signs: Vec<i64> = meta["signs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_i64().unwrap())
        .collect();
    let side = |i: usize| lambdas[i] > 0.0;
    for i in 0..lambdas.len() {
        for j in 0..lambdas.len() {
            assert_eq!(
                side(i) == side(j),
                signs[i] == signs[j],
                "trees {i} and {j}"
            );
        }
    }
    assert_eq!(doc["attribute"]["converged"], true);
    assert!(
        doc["attribute"]["direction_original"]
            .as_array()
            .unwrap()
            .len()
            == 18
    );
}

#[test]
fn analyze_identical_sample_reports_zero() {
    let dir = TempDir::new().unwrap();
    let path = corpus(
        &dir,
        "same.json",
        &[("a", &[(1, 0.4), (2, 0.1)]), ("b", &[(1, 0.4), (2, 0.1)])],
    );
    let out = run(&["analyze", arg(&path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = json_of(&out);
    assert_eq!(doc["attribute"], Value::Null);
    for key in [
        "total",
        "structure_explained",
        "structure_residual",
        "attribute_explained",
        "residual",
    ] {
        assert_eq!(doc["report"][key].as_f64(), Some(0.0), "{key}");
    }
}

#[test]
fn csv_matches_json_numbers() {
    let dir = TempDir::new().unwrap();
    let flip = dir.path().join("flip.json");
    run(&["synth", "--seed", "9", "--out", arg(&flip)]);
    let doc = json_of(&run(&["analyze", arg(&flip)]));
    let out = run(&["analyze", arg(&flip), "--format", "csv"]);
    assert!(out.status.success());
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let mut checked = 0;
    for row in reader.records() {
        let row = row.unwrap();
        if &row[0] == "report" {
            let want = doc["report"][&row[1]].as_f64().unwrap();
            assert_eq!(row[3].parse::<f64>().unwrap().to_bits(), want.to_bits());
            checked += 1;
        }
        if &row[0] == "attribute" && &row[1] == "direction" {
            let i: usize = row[2].parse().unwrap();
            let want = doc["attribute"]["direction"][i].as_f64().unwrap();
            assert_eq!(row[3].parse::<f64>().unwrap().to_bits(), want.to_bits());
            checked += 1;
        }
    }
    assert_eq!(checked, 6 + 18);
}

#[test]
fn non_convergence_exits_three_with_output() {
    let dir = TempDir::new().unwrap();
    let flip = dir.path().join("flip.json");
    run(&[
        "synth",
        "--seed",
        "1",
        "--noise",
        "0.2",
        "--out",
        arg(&flip),
    ]);
    let report = dir.path().join("report.json");
    let out = run(&[
        "analyze",
        arg(&flip),
        "--max-iter",
        "0",
        "--out",
        arg(&report),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let doc: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(doc["attribute"]["converged"], false);
}

#[test]
fn normalization_flags() {
    let dir = TempDir::new().unwrap();
    let path = corpus(&dir, "n.json", &[("a", &[(1, 10.0)]), ("b", &[(1, 20.0)])]);
    let plain = json_of(&run(&["center", arg(&path)]));
    assert_eq!(plain["normalized"], false);
    assert_eq!(plain["median_mean"][0]["a"][0], 15.0);
    let norm = json_of(&run(&["center", arg(&path), "--normalize"]));
    assert_eq!(norm["normalized"], true);
    assert_eq!(norm["median_mean"][0]["a"][0], 0.0);
    assert_eq!(norm["median_mean_original"][0]["a"][0], 15.0);
    let off = json_of(&run(&["analyze", arg(&path), "--no-normalize"]));
    assert_eq!(off["normalized"], false);
}
