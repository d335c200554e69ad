// SPDX-License-Identifier: Apache-2.0

//! Depth-limited binary decision trees over the three feasibility features.
//!
//! Samples with `feature <= threshold` go left. Every trained node carries
//! its weighted class mass `[not_feasible, feasible]`, Gini impurity and
//! the fraction of training samples that reached it.

mod export;
mod reference;
mod train;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Feature, FeatureVector, Label};

pub use export::{export_tree, import_tree, ExportFormat};
pub use reference::{reference_model, REFERENCE_MODEL_ID};
pub use train::{balanced_weights, gini_impurity, split_gain, train};

pub const FEATURE_NAMES: [&str; 3] = ["sf", "routing_layers", "row_utilization"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnerError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training needs both classes, got {not_feasible} not_feasible / {feasible} feasible")]
    DegenerateLabels { not_feasible: usize, feasible: usize },
    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("gini impurity of an empty node")]
    EmptyNode,
    #[error("non-finite feature value in sample {0}")]
    NonFiniteFeature(usize),
    #[error("malformed tree: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    #[default]
    Balanced,
    Uniform,
}

/// How a leaf turns its class mass into a feasibility score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafScore {
    /// Weighted feasible mass over total weighted mass.
    #[default]
    Weighted,
    /// Unweighted share of feasible training samples.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_depth: usize,
    pub class_weight: ClassWeight,
    pub min_samples_split: usize,
    #[serde(default)]
    pub leaf_score: LeafScore,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_depth: 3,
            class_weight: ClassWeight::Balanced,
            min_samples_split: 2,
            leaf_score: LeafScore::Weighted,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        if self.max_depth < 1 {
            return Err(LearnerError::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(LearnerError::InvalidConfig("min_samples_split must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: Feature,
    pub threshold: f64,
}

impl Split {
    pub fn goes_left(&self, f: &FeatureVector) -> bool {
        f.get(self.feature) <= self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    /// Weighted class mass `[not_feasible, feasible]`.
    pub value: [f64; 2],
    pub gini: f64,
    /// `None` where the fraction is not known (hand-built models).
    pub samples_frac: Option<f64>,
}

impl NodeStats {
    pub fn total_mass(&self) -> f64 {
        self.value[0] + self.value[1]
    }

    pub fn feasible_share(&self) -> f64 {
        self.value[1] / self.total_mass()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        split: Split,
        stats: Option<NodeStats>,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        score: f64,
        stats: NodeStats,
    },
    /// A region with no usable training support; predictions that land
    /// here are refused instead of scored.
    Unknown,
}

impl TreeNode {
    pub fn stats(&self) -> Option<&NodeStats> {
        match self {
            TreeNode::Internal { stats, .. } => stats.as_ref(),
            TreeNode::Leaf { stats, .. } => Some(stats),
            TreeNode::Unknown => None,
        }
    }

    /// Depth of the subtree; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
            _ => 0,
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
            _ => 1,
        }
    }

    /// Leaves (including unknown ones) in left-to-right order.
    pub fn leaves(&self) -> Vec<&TreeNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            match node {
                TreeNode::Internal { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
                leaf => out.push(leaf),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub feature: Feature,
    pub threshold: f64,
    pub direction: Direction,
}

impl PathStep {
    /// Human-readable condition, e.g. `sf <= 0.7` or `routing_layers > 3`.
    pub fn condition(&self) -> String {
        let op = match self.direction {
            Direction::Left => "≤",
            Direction::Right => ">",
        };
        let value = match self.feature {
            // integer feature: a 3.5 cut reads as "<= 3" / "> 3"
            Feature::RoutingLayers => format!("{}", self.threshold.floor()),
            _ => format_threshold(self.threshold),
        };
        format!("{} {op} {value}", self.feature)
    }
}

pub type DecisionPath = Vec<PathStep>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    /// P(feasible) in [0, 1].
    pub score: f64,
    pub path: DecisionPath,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PredictError {
    #[error("unsupported region: {}", .path.last().map(PathStep::condition).unwrap_or_default())]
    UnsupportedRegion { path: DecisionPath },
    #[error("invalid feature vector: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub config: TrainConfig,
    pub model_id: String,
    /// Per-class sample weights used in training; `None` when unknown.
    pub class_weights: Option<[f64; 2]>,
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn predict_score(&self, f: &FeatureVector) -> Result<Prediction, PredictError> {
        for feature in Feature::ALL {
            if !f.get(feature).is_finite() {
                return Err(PredictError::InvalidInput(format!("{feature} is not finite")));
            }
        }
        let mut path = Vec::with_capacity(self.config.max_depth);
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Internal { split, left, right, .. } => {
                    let direction = if split.goes_left(f) {
                        Direction::Left
                    } else {
                        Direction::Right
                    };
                    path.push(PathStep {
                        feature: split.feature,
                        threshold: split.threshold,
                        direction,
                    });
                    node = match direction {
                        Direction::Left => left,
                        Direction::Right => right,
                    };
                }
                TreeNode::Leaf { score, .. } => return Ok(Prediction { score: *score, path }),
                TreeNode::Unknown => return Err(PredictError::UnsupportedRegion { path }),
            }
        }
    }

    /// `feasible` iff score >= cutoff, so a score exactly at the cutoff
    /// counts as feasible.
    pub fn predict_class(&self, f: &FeatureVector, cutoff: f64) -> Result<Label, PredictError> {
        self.predict_score(f).map(|p| classify(p.score, cutoff))
    }
}

pub const DEFAULT_CUTOFF: f64 = 0.5;

pub fn classify(score: f64, cutoff: f64) -> Label {
    if score >= cutoff {
        Label::Feasible
    } else {
        Label::NotFeasible
    }
}

pub(crate) fn format_threshold(t: f64) -> String {
    let s = format!("{t:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

impl fmt::Display for DecisionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = export_tree(self, ExportFormat::Text);
        f.write_str(&String::from_utf8_lossy(&text))
    }
}
