use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weyl-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("weyl-lab-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn schema() -> Value {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/output.schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Checks the envelope against the required keys and simple types listed in
/// the shipped schema.
fn check_schema(v: &Value) {
    let s = schema();
    for key in s["required"].as_array().unwrap() {
        assert!(v.get(key.as_str().unwrap()).is_some(), "missing {key}");
    }
    let m = &s["properties"]["manifest"];
    let manifest = &v["manifest"];
    for key in m["required"].as_array().unwrap() {
        assert!(manifest.get(key.as_str().unwrap()).is_some(), "manifest missing {key}");
    }
    assert_eq!(manifest.as_object().unwrap().len(), m["properties"].as_object().unwrap().len());
    let sub = manifest["subcommand"].as_str().unwrap();
    assert!(m["properties"]["subcommand"]["enum"]
        .as_array()
        .unwrap()
        .iter()
        .any(|e| e == sub));
    assert!(manifest["worker_count"].as_u64().unwrap() >= 1);
    assert!(manifest["params"].is_object());
    let def = &s["$defs"][sub];
    let result = &v["result"];
    match def["type"].as_str().unwrap() {
        "array" => {
            for item in result.as_array().unwrap() {
                for key in def["items"]["required"].as_array().unwrap() {
                    assert!(item.get(key.as_str().unwrap()).is_some(), "{sub} item missing {key}");
                }
            }
        }
        _ => {
            for key in def["required"].as_array().unwrap() {
                assert!(result.get(key.as_str().unwrap()).is_some(), "{sub} missing {key}");
            }
        }
    }
}

#[test]
fn tables_csv_has_one_row_per_degree() {
    let out = run(&["tables", "--k", "2..12"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    let s0 = headers.iter().position(|h| h == "s0").unwrap();
    let records: Vec<_> = rows.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 11);
    assert_eq!(&records[0][0], "2");
    assert_eq!(&records[0][s0], "3");
    assert_eq!(&records[8][s0], "49");
}

#[test]
fn tables_json_and_markdown() {
    let v = json(&["tables", "--k", "2..4", "--format", "json"]);
    check_schema(&v);
    assert_eq!(v["result"][1]["sigma0"], "10");
    assert_eq!(v["result"][0]["bounds"]["holder"], "6/7");
    let out = run(&["tables", "--k", "5", "--format", "markdown"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("| 5 | 0 | 12 | 70/3 |"));
}

#[test]
fn sum_at_origin() {
    let v = json(&["sum", "--omega", "0,0,1", "--x", "0", "--y", "0", "--N", "7"]);
    check_schema(&v);
    assert_eq!(v["result"]["abs"], 7.0);
    let v = json(&["sum", "--monomial", "2", "--x", "0", "--y", "1/5", "--N", "5", "--method", "exact"]);
    assert!((v["result"]["abs"].as_f64().unwrap() - 5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn wsum_single_and_batch() {
    let v = json(&["wsum", "--monomial", "2", "--x", "0", "--y", "0", "--N", "16", "--method", "direct"]);
    check_schema(&v);
    assert!((v["result"]["W"].as_f64().unwrap() - (16.0 + 32.0 / 17.0)).abs() < 1e-9);

    let input = scratch("batch.csv");
    std::fs::write(&input, "x,y,N\n0,0,16\n1/3,0.25,64\n0.1,0.7,100\n").unwrap();
    let csv_out = scratch("batch_out.csv");
    let v = json(&[
        "wsum",
        "--monomial",
        "2",
        "--batch",
        input.to_str().unwrap(),
        "--csv",
        csv_out.to_str().unwrap(),
    ]);
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2]["N"], 100);
    assert!(rows.iter().all(|r| r["abs"].as_f64().unwrap() <= r["W"].as_f64().unwrap()));
    let written = std::fs::read_to_string(&csv_out).unwrap();
    assert!(written.starts_with("x,y,N,re,im,abs,W\n"));
    assert_eq!(written.lines().count(), 4);
}

#[test]
fn mvt_count_example() {
    let v = json(&["mvt-count", "--omega", "0,0,1", "--s", "2", "--N", "3"]);
    check_schema(&v);
    assert_eq!(v["result"]["J"], "15");
    let v = json(&["mvt-count", "--omega", "0,0,1", "--s", "3", "--N", "2", "--route", "join"]);
    assert_eq!(v["result"]["J"], "20");
}

#[test]
fn scan_writes_flagged_centres() {
    let csv_out = scratch("flagged.csv");
    let v = json(&[
        "scan",
        "--k",
        "2",
        "--N",
        "16",
        "--alpha",
        "0.9",
        "--window",
        "0,0.1,0,0.01",
        "--csv",
        csv_out.to_str().unwrap(),
    ]);
    check_schema(&v);
    let r = &v["result"];
    assert_eq!(r["s"], 3);
    assert_eq!(r["t"], 3);
    let flagged = r["large_count"].as_u64().unwrap();
    assert!(flagged >= 1);
    let written = std::fs::read_to_string(&csv_out).unwrap();
    assert_eq!(written.lines().count() as u64, flagged + 1);
}

#[test]
fn curve_sup_line_through_origin() {
    let v = json(&["curve-sup", "--monomial", "2", "--N", "16", "--tau", "1", "--c", "0", "--samples", "4096"]);
    check_schema(&v);
    assert!(v["result"]["sup_s"].as_f64().unwrap() >= 16.0 - 1e-9);
    assert_eq!(v["result"]["certified"], false);
    let points = scratch("curve.csv");
    std::fs::write(&points, "x,y\n0.3,0.7\n0,0\n0.25,0.1\n").unwrap();
    let v = json(&[
        "curve-sup",
        "--monomial",
        "3",
        "--N",
        "9",
        "--curve",
        "parametric",
        "--points",
        points.to_str().unwrap(),
    ]);
    assert_eq!(v["result"]["argmax"]["x"], 0.0);
    assert!((v["result"]["sup_s"].as_f64().unwrap() - 9.0).abs() < 1e-9);
}

#[test]
fn randomized_subcommands_require_a_seed() {
    for args in [
        vec!["mvt-mc", "--monomial", "2", "--s", "2", "--N", "3"],
        vec!["exponent", "--monomial", "2"],
        vec!["badset", "--monomial", "2", "--N", "16", "--alpha", "0.5"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    }
}

#[test]
fn exit_codes() {
    let budget = run(&["mvt-count", "--omega", "0,0,1", "--s", "4", "--N", "100000"]);
    assert_eq!(budget.status.code(), Some(3));
    let linear = run(&["sum", "--omega", "0,1", "--x", "0", "--y", "0", "--N", "3"]);
    assert_eq!(linear.status.code(), Some(2));
    let alpha = run(&["scan", "--k", "2", "--N", "8", "--alpha", "1.5"]);
    assert_eq!(alpha.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&alpha.stderr).contains("(0, 1)"));
    let unknown = run(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
    let both = run(&["sum", "--omega", "0,0,1", "--monomial", "2", "--x", "0", "--y", "0", "--N", "3"]);
    assert_eq!(both.status.code(), Some(2));
}

fn stripped(mut v: Value) -> Value {
    v["manifest"]["worker_count"] = Value::Null;
    v
}

#[test]
fn output_is_independent_of_thread_count() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["mvt-mc", "--monomial", "2", "--s", "2", "--N", "5", "--samples", "5000", "--seed", "11"],
        vec!["mvt-mc", "--monomial", "3", "--s", "1", "--N", "9", "--samples", "3000", "--seed", "4", "--target", "w"],
        vec![
            "exponent", "--monomial", "2", "--Ns", "8,16,32", "--trials", "10", "--samples", "512", "--seed", "3",
        ],
        vec![
            "badset", "--monomial", "2", "--family", "circles", "--N", "32", "--alpha", "0.8", "--trials", "100",
            "--samples", "256", "--seed", "8",
        ],
        vec!["scan", "--k", "2", "--N", "8", "--alpha", "0.9", "--s", "3", "--t", "3"],
        vec!["mvt-count", "--monomial", "3", "--s", "3", "--N", "12"],
    ];
    for case in cases {
        let mut one = case.clone();
        one.extend(["--no-wall-time", "--threads", "1"]);
        let mut many = case.clone();
        many.extend(["--no-wall-time", "--threads", "4"]);
        let a = run(&one);
        let b = run(&one);
        assert_eq!(a.stdout, b.stdout, "same manifest, different bytes: {case:?}");
        let va: Value = serde_json::from_slice(&a.stdout).unwrap();
        check_schema(&va);
        let vb = json(&many);
        assert_eq!(vb["manifest"]["worker_count"], 4);
        assert_eq!(stripped(va), stripped(vb), "{case:?}");
    }
}

#[test]
fn out_and_csv_files() {
    let out = scratch("exp.json");
    let csv_out = scratch("exp.csv");
    let status = bin()
        .args([
            "exponent", "--monomial", "2", "--family", "point", "--Ns", "8,16,32,64", "--trials", "10", "--seed",
            "1", "--out",
        ])
        .arg(&out)
        .arg("--csv")
        .arg(&csv_out)
        .status()
        .unwrap();
    assert!(status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    check_schema(&v);
    assert!((v["result"]["fit"]["slope"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let text = std::fs::read_to_string(&csv_out).unwrap();
    assert!(text.starts_with("N,mean_sup,median_sup,std\n"));
    assert_eq!(text.lines().count(), 5);
}
