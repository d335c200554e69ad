// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use feascore::learner::{export_tree, ExportFormat};
use feascore::scoring::{score, ScoreRequest};
use feascore::{reference_model, DecisionTree};
use feascore_cli::app;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(tree: Arc<DecisionTree>, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app(tree).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn reference() -> Arc<DecisionTree> {
    Arc::new(reference_model())
}

#[tokio::test]
async fn scores_reference_row() {
    let (status, body) = call(
        reference(),
        "POST",
        "/api/v1/score",
        Some(json!({"shape_factor": 0.44, "routing_layers": 4, "row_utilization_pct": 94.07})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["feasibility_score_pct"], json!(8.64));
    assert_eq!(body["predicted_class"], json!("not_feasible"));
    assert_eq!(body["unsupported"], json!(false));
    assert_eq!(body["model_id"], json!("reference"));
    assert_eq!(body["decision_path"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn polygon_and_shape_factor_together_is_rejected() {
    let (status, body) = call(
        reference(),
        "POST",
        "/api/v1/score",
        Some(json!({"polygon": "0 0;1 0;1 1;0 1", "shape_factor": 1.0, "routing_layers": 4, "row_utilization_pct": 70.0})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], json!("invalid_request"));
    assert_eq!(body["field"], json!("polygon"));
    assert!(body["reason"].as_str().unwrap().contains("not both"));
}

#[tokio::test]
async fn malformed_bodies_name_the_field() {
    let cases = [
        (
            json!({"shape_factor": 0.5, "row_utilization_pct": 70.0}),
            "routing_layers",
        ),
        (
            json!({"shape_factor": 0.5, "routing_layers": "four", "row_utilization_pct": 70.0}),
            "routing_layers",
        ),
        (
            json!({"shape_factor": 0.5, "routing_layers": 4, "row_utilization_pct": 70.0, "colour": 1}),
            "colour",
        ),
        (
            json!({"shape_factor": 0.5, "routing_layers": 4, "row_utilization_pct": 500.0}),
            "row_utilization_pct",
        ),
        (
            json!({"polygon": "0 0;1 1;2 0", "routing_layers": 4, "row_utilization_pct": 70.0}),
            "polygon",
        ),
        (
            json!({"shape_factor": 0.5, "routing_layers": 4, "row_utilization_pct": 70.0, "model": "other"}),
            "model",
        ),
    ];
    for (payload, field) in cases {
        let (status, body) = call(reference(), "POST", "/api/v1/score", Some(payload.clone())).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{payload}");
        assert_eq!(body["field"], json!(field), "{payload} -> {body}");
    }
    let req = Request::post("/api/v1/score").body(Body::from("{not json")).unwrap();
    let resp = app(reference()).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unsupported_region_is_a_normal_answer() {
    let (status, body) = call(
        reference(),
        "POST",
        "/api/v1/score",
        Some(json!({"shape_factor": 0.65, "routing_layers": 3, "row_utilization_pct": 80.0})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["unsupported"], json!(true));
    assert_eq!(body["feasibility_score_pct"], Value::Null);
    assert_eq!(body["message"], json!("insufficient training data: routing_layers ≤ 3"));
}

#[tokio::test]
async fn shape_factor_endpoint() {
    let (status, body) = call(
        reference(),
        "POST",
        "/api/v1/shape-factor",
        Some(json!({"polygon": "0 0;1 0;1 0.4375;0 0.4375"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert!((body["shape_factor"].as_f64().unwrap() - 0.6086956522).abs() < 1e-9);
    assert_eq!(body["longest_edge"], json!(1.0));
    let (status, body) = call(
        reference(),
        "POST",
        "/api/v1/shape-factor",
        Some(json!({"polygon": "0 0;2 0;0 2;2 2"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["field"], json!("polygon"));
}

#[tokio::test]
async fn model_endpoint_matches_export() {
    let tree = reference();
    let (status, body) = call(tree.clone(), "GET", "/api/v1/model", None).await;
    assert_eq!(status, StatusCode::OK);
    let exported: Value = serde_json::from_slice(&export_tree(&tree, ExportFormat::Json)).unwrap();
    assert_eq!(body, exported);
    let (status, health) = call(tree, "GET", "/api/v1/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(health, json!({"status": "ok", "model_id": "reference"}));
}

#[tokio::test]
async fn http_and_library_agree() {
    let tree = reference();
    for (sf, layers, util) in [
        (0.7823, 4, 87.69),
        (0.8936, 4, 69.12),
        (0.3, 6, 88.5),
        (0.71, 5, 83.6),
        (0.7, 4, 88.6),
    ] {
        let req = ScoreRequest {
            shape_factor: Some(sf),
            routing_layers: layers,
            row_utilization_pct: util,
            ..Default::default()
        };
        let direct = serde_json::to_value(score(&tree, &req).unwrap()).unwrap();
        let (_, body) = call(
            tree.clone(),
            "POST",
            "/api/v1/score",
            Some(serde_json::to_value(&req).unwrap()),
        )
        .await;
        assert_eq!(body, direct);
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_requests_over_a_socket() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let server = tokio::spawn(async move { axum::serve(listener, app(reference())).await });
    let client = reqwest::Client::new();
    let url = format!("http://{addr}/api/v1/score");

    // warm the connection pool so the latency check measures the handler
    client.get(format!("http://{addr}/api/v1/health")).send().await.unwrap();

    let rows = [
        (0.7823, 87.69, 58.66),
        (0.44, 94.07, 8.64),
        (0.8936, 69.12, 100.0),
        (0.65, 80.0, 56.6),
    ];
    let mut tasks = Vec::new();
    for i in 0..32 {
        let (client, url) = (client.clone(), url.clone());
        let (sf, util, want) = rows[i % rows.len()];
        tasks.push(tokio::spawn(async move {
            let t = Instant::now();
            let resp = client
                .post(&url)
                .json(&json!({"shape_factor": sf, "routing_layers": 4, "row_utilization_pct": util}))
                .send()
                .await
                .unwrap();
            assert_eq!(resp.status(), 200);
            let body: Value = resp.json().await.unwrap();
            assert_eq!(body["feasibility_score_pct"], json!(want), "request {i}");
            t.elapsed()
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }

    let t = Instant::now();
    let resp = client
        .post(&url)
        .json(&json!({"shape_factor": 0.44, "routing_layers": 4, "row_utilization_pct": 94.07}))
        .send()
        .await
        .unwrap();
    resp.bytes().await.unwrap();
    let single = t.elapsed();
    assert!(single <= Duration::from_millis(50), "/score took {single:?}");
    server.abort();
}
