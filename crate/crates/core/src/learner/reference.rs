// SPDX-License-Identifier: Apache-2.0

//! Hand-built reference feasibility tree.
//!
//! Only the branches with more than three routing layers are documented;
//! the few-layer branches are [`TreeNode::Unknown`].
//!
//! ```text
//! sf <= 0.7
//! ├── routing_layers <= 3.5 ─ unknown
//! └── row_utilization <= 88.5 ─ 0.566 | 0.0864
//! sf > 0.7
//! ├── routing_layers <= 3.5 ─ unknown
//! └── row_utilization <= 83.6 ─ 1.0 | 0.5866
//! ```

use super::{gini_impurity, DecisionTree, NodeStats, Split, TrainConfig, TreeNode};
use crate::dataset::Feature;

pub const REFERENCE_MODEL_ID: &str = "reference";

fn leaf(score: f64, samples_frac: Option<f64>) -> TreeNode {
    let value = [1.0 - score, score];
    TreeNode::Leaf {
        score,
        stats: NodeStats {
            value,
            gini: gini_impurity(value).unwrap_or(0.0),
            samples_frac,
        },
    }
}

fn split(feature: Feature, threshold: f64, left: TreeNode, right: TreeNode) -> TreeNode {
    TreeNode::Internal {
        split: Split { feature, threshold },
        stats: None,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Leaf values are stored as class proportions `[1 - score, score]`, not
/// weighted masses, because the training masses behind them are unknown.
pub fn reference_model() -> DecisionTree {
    let narrow = split(
        Feature::RoutingLayers,
        3.5,
        TreeNode::Unknown,
        split(
            Feature::RowUtilization,
            88.5,
            leaf(0.566, Some(0.295)),
            leaf(0.0864, None),
        ),
    );
    let squarish = split(
        Feature::RoutingLayers,
        3.5,
        TreeNode::Unknown,
        split(
            Feature::RowUtilization,
            83.6,
            leaf(1.0, Some(0.411)),
            leaf(0.5866, None),
        ),
    );
    DecisionTree {
        root: split(Feature::ShapeFactor, 0.7, narrow, squarish),
        config: TrainConfig::default(),
        model_id: REFERENCE_MODEL_ID.to_string(),
        class_weights: None,
    }
}
