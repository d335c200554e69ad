// SPDX-License-Identifier: Apache-2.0

use std::io::{BufRead, BufReader};
use std::process::{Command, Output, Stdio};

fn feascore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feascore"))
        .args(args)
        .env_remove("FEASCORE_MODEL")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn predict_reference_row() {
    let o = feascore(&[
        "predict",
        "--model",
        "reference",
        "--sf",
        "0.8936",
        "--util",
        "69.12",
        "--layers",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "100.00");
}

#[test]
fn shape_factor_of_square() {
    let o = feascore(&["shape-factor", "--polygon", "0 0;1 0;1 1;0 1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1.000000");
    let o = feascore(&["shape-factor", "--polygon", "0 0;1 0;1 1;0 1", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["shape_factor"], serde_json::json!(1.0));
}

#[test]
fn unsupported_region_exits_one() {
    let o = feascore(&[
        "predict",
        "--model",
        "reference",
        "--sf",
        "0.65",
        "--util",
        "80",
        "--layers",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("unsupported region: routing_layers ≤ 3"),
        "{}",
        stderr(&o)
    );
    assert!(stdout(&o).is_empty());
}

#[test]
fn exit_codes() {
    assert_eq!(feascore(&["predict", "--util", "80"]).status.code(), Some(2));
    assert_eq!(feascore(&["no-such-command"]).status.code(), Some(2));
    let both = feascore(&[
        "predict",
        "--sf",
        "0.5",
        "--polygon",
        "0 0;1 0;1 1;0 1",
        "--util",
        "80",
        "--layers",
        "4",
    ]);
    assert_eq!(both.status.code(), Some(2));
    let bad = feascore(&["shape-factor", "--polygon", "0 0;1 1;2 0"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(
        feascore(&["predict", "--sf", "0.5", "--util", "500", "--layers", "4"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        feascore(&["export", "--model", "/nonexistent/model.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(feascore(&["--help"]).status.code(), Some(0));
}

#[test]
fn pipeline_gen_train_predict() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("designs.csv");
    let model = dir.path().join("model.json");
    let (data_s, model_s) = (data.to_str().unwrap(), model.to_str().unwrap());

    let g = feascore(&[
        "gen",
        "--n-records",
        "96",
        "--seed",
        "4",
        "--noise",
        "0.05",
        "-o",
        data_s,
    ]);
    assert_eq!(g.status.code(), Some(0), "{}", stderr(&g));
    let again = feascore(&["gen", "--n-records", "96", "--seed", "4", "--noise", "0.05"]);
    assert_eq!(std::fs::read(&data).unwrap(), again.stdout);

    let t = feascore(&["train", "--data", data_s, "-o", model_s]);
    assert_eq!(t.status.code(), Some(0), "{}", stderr(&t));

    let o = Command::new(env!("CARGO_BIN_EXE_feascore"))
        .args(["predict", "--sf", "0.9", "--util", "60", "--layers", "5", "--json"])
        .env("FEASCORE_MODEL", model_s)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["model_id"].as_str().unwrap().starts_with("trained-"));
    let pct = v["feasibility_score_pct"].as_f64().unwrap();
    assert!((0.0..=100.0).contains(&pct));

    let cv = feascore(&["cv", "--data", data_s, "--json"]);
    assert_eq!(cv.status.code(), Some(0), "{}", stderr(&cv));
    let report: serde_json::Value = serde_json::from_str(&stdout(&cv)).unwrap();
    assert!(report["mean"].as_f64().unwrap() > 0.5);
    assert_eq!(report["folds"].as_array().unwrap().len(), 8);

    let stats = feascore(&["stats", "--data", data_s]);
    assert_eq!(stats.status.code(), Some(0));
    assert!(stdout(&stats).contains("96 records counted"));

    for fmt in ["dot", "text", "json"] {
        let e = feascore(&["export", "--model", model_s, "--format", fmt]);
        assert_eq!(e.status.code(), Some(0), "{fmt}");
        assert!(!e.stdout.is_empty());
    }
}

#[test]
fn reference_export_is_dot() {
    let o = feascore(&["export"]);
    let dot = stdout(&o);
    assert!(dot.starts_with("digraph Tree {"));
    assert!(dot.contains("sf <= 0.7"));
}

#[test]
fn invalid_dataset_reports_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(
        &path,
        "project_id,design_id,shape_factor,row_utilization_pct,routing_layers,label\nA,d1,0.8,abc,4,feasible\n",
    )
    .unwrap();
    let o = feascore(&["cv", "--data", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));
}

#[test]
fn serve_binds_and_answers() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_feascore"))
        .args(["serve", "--bind", "127.0.0.1:0"])
        .env_remove("FEASCORE_MODEL")
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect(&line).to_string();

    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .unwrap();
    let body: serde_json::Value = rt.block_on(async {
        reqwest::get(format!("http://{addr}/api/v1/health"))
            .await
            .unwrap()
            .json()
            .await
            .unwrap()
    });
    assert_eq!(body["status"], "ok");

    // a second server on the same address cannot bind
    let clash = feascore(&["serve", "--bind", &addr]);
    assert_eq!(clash.status.code(), Some(1));

    child.kill().unwrap();
    child.wait().unwrap();
}
