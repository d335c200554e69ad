// SPDX-License-Identifier: Apache-2.0

//! HTTP JSON scoring service. The model is loaded once and shared
//! read-only by every handler.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use feascore::learner::{export_tree, ExportFormat};
use feascore::scoring::{parse_polygon_field, score, RequestError, ScoreRequest};
use feascore::DecisionTree;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

type Shared = Arc<DecisionTree>;

struct ApiError(RequestError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (StatusCode::BAD_REQUEST, Json(self.0)).into_response()
    }
}

impl From<RequestError> for ApiError {
    fn from(e: RequestError) -> Self {
        ApiError(e)
    }
}

/// Pulls the offending field name out of a serde message such as
/// "missing field `routing_layers` at line 1 column 40".
fn field_of(message: &str) -> &str {
    message
        .split('`')
        .nth(1)
        .filter(|_| {
            message.starts_with("missing field")
                || message.starts_with("unknown field")
                || message.starts_with("duplicate field")
        })
        .unwrap_or("body")
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.inner().to_string();
        let field = if path == "." { field_of(&msg).to_string() } else { path };
        ApiError(RequestError::invalid(&field, msg))
    })
}

async fn score_handler(State(tree): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let req: ScoreRequest = parse_body(&body)?;
    let resp = score(&tree, &req)?;
    Ok(Json(resp).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ShapeRequest {
    polygon: String,
}

async fn shape_factor_handler(body: Bytes) -> Result<Response, ApiError> {
    let req: ShapeRequest = parse_body(&body)?;
    let poly = parse_polygon_field(&req.polygon)?;
    Ok(Json(poly.shape_metrics()).into_response())
}

async fn model_handler(State(tree): State<Shared>) -> Response {
    (
        [(header::CONTENT_TYPE, "application/json")],
        export_tree(&tree, ExportFormat::Json),
    )
        .into_response()
}

async fn health_handler(State(tree): State<Shared>) -> Response {
    Json(json!({ "status": "ok", "model_id": tree.model_id })).into_response()
}

pub fn app(tree: Shared) -> Router {
    Router::new()
        .route("/api/v1/score", post(score_handler))
        .route("/api/v1/shape-factor", post(shape_factor_handler))
        .route("/api/v1/model", get(model_handler))
        .route("/api/v1/health", get(health_handler))
        .with_state(tree)
}

/// Binds `addr` and serves until ctrl-c. `on_bound` receives the actual
/// address, which matters when binding port 0.
pub async fn serve(tree: Shared, addr: SocketAddr, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, app(tree))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
