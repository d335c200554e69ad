// SPDX-License-Identifier: Apache-2.0

//! Request/response types for scoring one candidate region. The command
//! line, the HTTP service and the Python bindings all go through [`score`].

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureVector, Label, UTILIZATION_MAX_PCT};
use crate::geometry::{parse_vertices, RectilinearPolygon};
use crate::learner::{DecisionTree, PathStep, PredictError, DEFAULT_CUTOFF};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreRequest {
    /// `"x0 y0;x1 y1;..."`; exclusive with `shape_factor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape_factor: Option<f64>,
    pub row_utilization_pct: f64,
    pub routing_layers: u32,
    /// Model the caller expects; must match the model being served.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub shape_factor: f64,
    /// Two-decimal percentage; `None` when unsupported.
    pub feasibility_score_pct: Option<f64>,
    pub predicted_class: Option<Label>,
    pub decision_path: Vec<PathStep>,
    pub model_id: String,
    pub unsupported: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{field}: {reason}")]
pub struct RequestError {
    pub error: String,
    pub field: String,
    pub reason: String,
}

impl RequestError {
    pub fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Self {
            error: "invalid_request".into(),
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Percent with two decimals, as shown to users.
pub fn to_percent(score: f64) -> f64 {
    (score * 10_000.0).round() / 100.0
}

pub fn parse_polygon_field(text: &str) -> Result<RectilinearPolygon, RequestError> {
    let vertices = parse_vertices(text).map_err(|e| RequestError::invalid("polygon", e.to_string()))?;
    RectilinearPolygon::new(&vertices).map_err(|e| RequestError::invalid("polygon", e.to_string()))
}

pub fn request_features(req: &ScoreRequest) -> Result<FeatureVector, RequestError> {
    let shape_factor = match (&req.polygon, req.shape_factor) {
        (Some(_), Some(_)) => {
            return Err(RequestError::invalid(
                "polygon",
                "give either polygon or shape_factor, not both",
            ))
        }
        (None, None) => return Err(RequestError::invalid("polygon", "polygon or shape_factor is required")),
        (Some(text), None) => parse_polygon_field(text)?.shape_factor(),
        (None, Some(sf)) => {
            if !sf.is_finite() || sf <= 0.0 {
                return Err(RequestError::invalid("shape_factor", "must be a positive number"));
            }
            sf
        }
    };
    let util = req.row_utilization_pct;
    if !util.is_finite() || util <= 0.0 || util > UTILIZATION_MAX_PCT {
        return Err(RequestError::invalid(
            "row_utilization_pct",
            format!("must lie in (0, {UTILIZATION_MAX_PCT}]"),
        ));
    }
    if req.routing_layers < 1 {
        return Err(RequestError::invalid("routing_layers", "must be >= 1"));
    }
    Ok(FeatureVector::new(shape_factor, req.routing_layers, util))
}

pub fn score(tree: &DecisionTree, req: &ScoreRequest) -> Result<ScoreResponse, RequestError> {
    if let Some(model) = &req.model {
        if model != &tree.model_id {
            return Err(RequestError::invalid(
                "model",
                format!("this endpoint serves model {:?}", tree.model_id),
            ));
        }
    }
    let cutoff = req.cutoff.unwrap_or(DEFAULT_CUTOFF);
    if !(0.0..=1.0).contains(&cutoff) {
        return Err(RequestError::invalid("cutoff", "must lie in [0, 1]"));
    }
    let features = request_features(req)?;
    Ok(score_features(tree, &features, cutoff))
}

pub fn score_features(tree: &DecisionTree, features: &FeatureVector, cutoff: f64) -> ScoreResponse {
    let base = ScoreResponse {
        shape_factor: features.shape_factor,
        feasibility_score_pct: None,
        predicted_class: None,
        decision_path: Vec::new(),
        model_id: tree.model_id.clone(),
        unsupported: false,
        message: None,
    };
    match tree.predict_score(features) {
        Ok(p) => ScoreResponse {
            feasibility_score_pct: Some(to_percent(p.score)),
            predicted_class: Some(crate::learner::classify(p.score, cutoff)),
            decision_path: p.path,
            ..base
        },
        Err(PredictError::UnsupportedRegion { path }) => {
            let condition = path.last().map(PathStep::condition).unwrap_or_default();
            ScoreResponse {
                decision_path: path,
                unsupported: true,
                message: Some(format!("insufficient training data: {condition}")),
                ..base
            }
        }
        Err(PredictError::InvalidInput(reason)) => ScoreResponse {
            unsupported: true,
            message: Some(reason),
            ..base
        },
    }
}
