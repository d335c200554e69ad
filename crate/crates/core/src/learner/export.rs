// SPDX-License-Identifier: Apache-2.0

//! Tree serialization: lossless JSON, Graphviz DOT and an indented text dump.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    format_threshold, ClassWeight, DecisionTree, LeafScore, LearnerError, NodeStats, Split, TrainConfig, TreeNode,
    FEATURE_NAMES,
};
use crate::dataset::Feature;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Json,
    Dot,
    Text,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ExportFormat::Json),
            "dot" => Ok(ExportFormat::Dot),
            "text" | "txt" => Ok(ExportFormat::Text),
            other => Err(format!("unknown export format {other:?} (expected json|dot|text)")),
        }
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireNode {
    #[serde(skip_serializing_if = "Option::is_none")]
    feature: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    left: Option<Box<WireNode>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    right: Option<Box<WireNode>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gini: Option<f64>,
    /// Serialized as `null` when a node carries stats but no known fraction.
    #[serde(
        default,
        deserialize_with = "present_or_null",
        skip_serializing_if = "Option::is_none"
    )]
    samples_frac: Option<Option<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unknown: Option<bool>,
}

fn present_or_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Option<f64>>, D::Error> {
    Option::<f64>::deserialize(d).map(Some)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireConfig {
    max_depth: usize,
    class_weight: ClassWeight,
    min_samples_split: usize,
    #[serde(default)]
    leaf_score: LeafScore,
    feature_names: Vec<String>,
}

impl WireConfig {
    fn new(c: &TrainConfig) -> Self {
        Self {
            max_depth: c.max_depth,
            class_weight: c.class_weight,
            min_samples_split: c.min_samples_split,
            leaf_score: c.leaf_score,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn config(&self) -> TrainConfig {
        TrainConfig {
            max_depth: self.max_depth,
            class_weight: self.class_weight,
            min_samples_split: self.min_samples_split,
            leaf_score: self.leaf_score,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireTree {
    model_id: String,
    class_weights: Option<[f64; 2]>,
    config: WireConfig,
    root: WireNode,
}

fn to_wire(node: &TreeNode) -> WireNode {
    let mut w = WireNode::default();
    let put_stats = |w: &mut WireNode, s: &NodeStats| {
        w.gini = Some(s.gini);
        w.samples_frac = Some(s.samples_frac);
        w.value = Some(s.value);
    };
    match node {
        TreeNode::Internal {
            split,
            stats,
            left,
            right,
        } => {
            w.feature = Some(split.feature.name().to_string());
            w.threshold = Some(split.threshold);
            w.left = Some(Box::new(to_wire(left)));
            w.right = Some(Box::new(to_wire(right)));
            if let Some(s) = stats {
                put_stats(&mut w, s);
            }
        }
        TreeNode::Leaf { score, stats } => {
            w.score = Some(*score);
            put_stats(&mut w, stats);
        }
        TreeNode::Unknown => w.unknown = Some(true),
    }
    w
}

fn schema(msg: impl Into<String>) -> LearnerError {
    LearnerError::Schema(msg.into())
}

fn wire_stats(w: &WireNode, at: &str) -> Result<Option<NodeStats>, LearnerError> {
    match (w.value, w.gini) {
        (None, None) if w.samples_frac.is_none() => Ok(None),
        (Some(value), Some(gini)) => {
            if value.iter().any(|m| !m.is_finite() || *m < 0.0) {
                return Err(schema(format!("{at}: class mass must be finite and >= 0")));
            }
            if !(0.0..=0.5 + 1e-12).contains(&gini) {
                return Err(schema(format!("{at}: gini {gini} outside [0, 0.5]")));
            }
            let samples_frac = w.samples_frac.flatten();
            if let Some(f) = samples_frac {
                if !(0.0..=1.0 + 1e-12).contains(&f) {
                    return Err(schema(format!("{at}: samples_frac {f} outside [0, 1]")));
                }
            }
            Ok(Some(NodeStats {
                value,
                gini,
                samples_frac,
            }))
        }
        _ => Err(schema(format!("{at}: value and gini must appear together"))),
    }
}

fn from_wire(w: WireNode, at: &str) -> Result<TreeNode, LearnerError> {
    if w.unknown == Some(true) {
        let extra = w.feature.is_some() || w.score.is_some() || w.left.is_some() || w.right.is_some();
        if extra {
            return Err(schema(format!("{at}: unknown leaf carries other fields")));
        }
        return Ok(TreeNode::Unknown);
    }
    let stats = wire_stats(&w, at)?;
    match (w.feature, w.score) {
        (Some(name), None) => {
            let feature: Feature = name.parse().map_err(|e| schema(format!("{at}: {e}")))?;
            let threshold = w
                .threshold
                .ok_or_else(|| schema(format!("{at}: internal node without threshold")))?;
            if !threshold.is_finite() {
                return Err(schema(format!("{at}: non-finite threshold")));
            }
            let left = w.left.ok_or_else(|| schema(format!("{at}: missing left child")))?;
            let right = w.right.ok_or_else(|| schema(format!("{at}: missing right child")))?;
            Ok(TreeNode::Internal {
                split: Split { feature, threshold },
                stats,
                left: Box::new(from_wire(*left, &format!("{at}.left"))?),
                right: Box::new(from_wire(*right, &format!("{at}.right"))?),
            })
        }
        (None, Some(score)) => {
            if !(0.0..=1.0).contains(&score) {
                return Err(schema(format!("{at}: score {score} outside [0, 1]")));
            }
            if w.left.is_some() || w.right.is_some() || w.threshold.is_some() {
                return Err(schema(format!("{at}: leaf with children")));
            }
            let stats = stats.ok_or_else(|| schema(format!("{at}: leaf without value/gini")))?;
            Ok(TreeNode::Leaf { score, stats })
        }
        (Some(_), Some(_)) => Err(schema(format!("{at}: node is both internal and leaf"))),
        (None, None) => Err(schema(format!("{at}: node is neither internal nor leaf"))),
    }
}

pub fn export_tree(tree: &DecisionTree, format: ExportFormat) -> Vec<u8> {
    match format {
        ExportFormat::Json => {
            let doc = WireTree {
                model_id: tree.model_id.clone(),
                class_weights: tree.class_weights,
                config: WireConfig::new(&tree.config),
                root: to_wire(&tree.root),
            };
            let mut out = serde_json::to_vec_pretty(&doc).expect("tree serializes");
            out.push(b'\n');
            out
        }
        ExportFormat::Dot => to_dot(tree).into_bytes(),
        ExportFormat::Text => to_text(tree).into_bytes(),
    }
}

/// Reads a JSON tree, either the full document written by [`export_tree`]
/// or a bare root node.
pub fn import_tree(bytes: &[u8]) -> Result<DecisionTree, LearnerError> {
    let value: serde_json::Value = serde_json::from_slice(bytes).map_err(|e| schema(e.to_string()))?;
    let is_doc = value.get("root").is_some();
    let tree = if is_doc {
        let doc: WireTree = serde_json::from_value(value).map_err(|e| schema(e.to_string()))?;
        if doc.config.feature_names != FEATURE_NAMES {
            return Err(schema(format!(
                "unexpected feature_names {:?}",
                doc.config.feature_names
            )));
        }
        let config = doc.config.config();
        config.validate().map_err(|e| schema(e.to_string()))?;
        if let Some(w) = doc.class_weights {
            if w.iter().any(|x| !x.is_finite() || *x <= 0.0) {
                return Err(schema("class_weights must be positive"));
            }
        }
        DecisionTree {
            root: from_wire(doc.root, "root")?,
            config,
            model_id: doc.model_id,
            class_weights: doc.class_weights,
        }
    } else {
        let root: WireNode = serde_json::from_value(value).map_err(|e| schema(e.to_string()))?;
        let root = from_wire(root, "root")?;
        let config = TrainConfig {
            max_depth: root.depth().max(1),
            ..TrainConfig::default()
        };
        DecisionTree {
            root,
            config,
            model_id: "imported".into(),
            class_weights: None,
        }
    };
    if tree.depth() > tree.config.max_depth {
        return Err(schema(format!(
            "tree depth {} exceeds max_depth {}",
            tree.depth(),
            tree.config.max_depth
        )));
    }
    Ok(tree)
}

const NOT_FEASIBLE_RGB: (u8, u8, u8) = (0xe5, 0x81, 0x39);
const FEASIBLE_RGB: (u8, u8, u8) = (0x39, 0x9d, 0xe5);

/// Majority-class color, faded towards white as the node gets less pure.
fn fill_color(share_feasible: f64) -> String {
    let (r, g, b) = if share_feasible >= 0.5 {
        FEASIBLE_RGB
    } else {
        NOT_FEASIBLE_RGB
    };
    let alpha = (2.0 * share_feasible - 1.0).abs();
    let mix = |c: u8| (255.0 - alpha * (255.0 - f64::from(c))).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(r), mix(g), mix(b))
}

fn stats_lines(stats: &NodeStats) -> String {
    let total = stats.total_mass();
    let samples = stats
        .samples_frac
        .map_or("?".to_string(), |f| format!("{:.1}%", 100.0 * f));
    format!(
        "gini = {:.3}\\nsamples = {}\\nvalue = [{:.3}, {:.3}]",
        stats.gini,
        samples,
        stats.value[0] / total,
        stats.value[1] / total
    )
}

fn to_dot(tree: &DecisionTree) -> String {
    let mut out = String::new();
    out.push_str("digraph Tree {\n");
    out.push_str("node [shape=box, style=\"filled, rounded\", color=\"black\", fontname=\"helvetica\"] ;\n");
    out.push_str("edge [fontname=\"helvetica\"] ;\n");
    let mut next_id = 0usize;
    dot_node(&tree.root, &mut out, &mut next_id, None);
    out.push_str("}\n");
    out
}

fn dot_node(node: &TreeNode, out: &mut String, next_id: &mut usize, parent: Option<(usize, bool)>) {
    let id = *next_id;
    *next_id += 1;
    match node {
        TreeNode::Internal { split, stats, .. } => {
            let mut label = format!("{} <= {}", split.feature, format_threshold(split.threshold));
            let mut fill = "#ffffff".to_string();
            if let Some(s) = stats {
                label.push_str("\\n");
                label.push_str(&stats_lines(s));
                fill = fill_color(s.feasible_share());
            }
            let _ = writeln!(out, "{id} [label=\"{label}\", fillcolor=\"{fill}\"] ;");
        }
        TreeNode::Leaf { score, stats } => {
            let label = format!("{}\\nscore = {:.2}%", stats_lines(stats), 100.0 * score);
            let _ = writeln!(out, "{id} [label=\"{label}\", fillcolor=\"{}\"] ;", fill_color(*score));
        }
        TreeNode::Unknown => {
            let _ = writeln!(
                out,
                "{id} [label=\"unknown\\ninsufficient training data\", fillcolor=\"#d9d9d9\"] ;"
            );
        }
    }
    if let Some((pid, is_left)) = parent {
        if pid == 0 {
            let (angle, head) = if is_left { (45, "True") } else { (-45, "False") };
            let _ = writeln!(
                out,
                "{pid} -> {id} [labeldistance=2.5, labelangle={angle}, headlabel=\"{head}\"] ;"
            );
        } else {
            let _ = writeln!(out, "{pid} -> {id} ;");
        }
    }
    if let TreeNode::Internal { left, right, .. } = node {
        dot_node(left, out, next_id, Some((id, true)));
        dot_node(right, out, next_id, Some((id, false)));
    }
}

fn to_text(tree: &DecisionTree) -> String {
    let mut out = String::new();
    text_node(&tree.root, 0, &mut out);
    out
}

fn text_node(node: &TreeNode, depth: usize, out: &mut String) {
    let indent = "|   ".repeat(depth);
    match node {
        TreeNode::Internal { split, left, right, .. } => {
            let t = format_threshold(split.threshold);
            let _ = writeln!(out, "{indent}|--- {} <= {t}", split.feature);
            text_node(left, depth + 1, out);
            let _ = writeln!(out, "{indent}|--- {} >  {t}", split.feature);
            text_node(right, depth + 1, out);
        }
        TreeNode::Leaf { score, stats } => {
            let total = stats.total_mass();
            let samples = stats
                .samples_frac
                .map_or("?".to_string(), |f| format!("{:.1}%", 100.0 * f));
            let _ = writeln!(
                out,
                "{indent}|--- score: {:.2}% [{:.3}, {:.3}] samples: {samples}",
                100.0 * score,
                stats.value[0] / total,
                stats.value[1] / total
            );
        }
        TreeNode::Unknown => {
            let _ = writeln!(out, "{indent}|--- unknown (insufficient training data)");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureVector, Label};
    use crate::learner::{reference_model, train};

    #[test]
    fn reference_json_round_trip() {
        let tree = reference_model();
        let bytes = export_tree(&tree, ExportFormat::Json);
        let back = import_tree(&bytes).unwrap();
        assert_eq!(back, tree);
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.contains("\"unknown\": true"));
        assert!(text.contains("\"feature\": \"sf\""));
    }

    #[test]
    fn single_leaf_dot_has_one_node() {
        let data = vec![
            (FeatureVector::new(0.5, 4, 80.0), Label::Feasible),
            (FeatureVector::new(0.5, 4, 80.0), Label::NotFeasible),
        ];
        let tree = train(&data, &TrainConfig::default()).unwrap();
        let dot = String::from_utf8(export_tree(&tree, ExportFormat::Dot)).unwrap();
        assert_eq!(dot.matches("[label=").count(), 1);
        assert!(!dot.contains("->"));
    }

    #[test]
    fn dot_follows_node_conventions() {
        let dot = String::from_utf8(export_tree(&reference_model(), ExportFormat::Dot)).unwrap();
        assert!(dot.starts_with("digraph Tree {"));
        assert!(dot.contains("sf <= 0.7"));
        assert!(dot.contains("row_utilization <= 88.5"));
        assert!(dot.contains("samples = 29.5%"));
        assert!(dot.contains("value = [0.000, 1.000]"));
        assert!(dot.contains("insufficient training data"));
        assert!(dot.contains("fillcolor=\"#399de5\""));
        assert_eq!(dot.matches("->").count(), 10);
    }

    #[test]
    fn text_dump() {
        let text = String::from_utf8(export_tree(&reference_model(), ExportFormat::Text)).unwrap();
        assert!(text.lines().next().unwrap().starts_with("|--- sf <= 0.7"));
        assert!(text.contains("score: 56.60%"));
        assert!(text.contains("unknown"));
    }

    #[test]
    fn bare_node_import() {
        let tree = import_tree(br#"{"score": 0.25, "gini": 0.375, "samples_frac": 1.0, "value": [3, 1]}"#).unwrap();
        assert_eq!(tree.model_id, "imported");
        assert!(matches!(tree.root, TreeNode::Leaf { score, .. } if score == 0.25));
    }

    #[test]
    fn malformed_imports() {
        let cases: [&[u8]; 8] = [
            b"not json",
            br#"{"feature": "sf", "threshold": 0.5, "left": {"unknown": true}}"#,
            br#"{"feature": "area", "threshold": 0.5, "left": {"unknown": true}, "right": {"unknown": true}}"#,
            br#"{"score": 1.5, "gini": 0.0, "samples_frac": 1.0, "value": [0, 1]}"#,
            br#"{"score": 0.5}"#,
            br#"{"gini": 0.0, "value": [0, 1]}"#,
            br#"{"unknown": true, "score": 0.5}"#,
            br#"{"score": 0.5, "gini": 0.5, "samples_frac": 1.0, "value": [1, 1], "colour": "red"}"#,
        ];
        for case in cases {
            assert!(
                matches!(import_tree(case), Err(LearnerError::Schema(_))),
                "accepted {}",
                String::from_utf8_lossy(case)
            );
        }
    }

    #[test]
    fn depth_over_config_rejected() {
        let mut tree = reference_model();
        tree.config.max_depth = 2;
        let bytes = export_tree(&tree, ExportFormat::Json);
        assert!(import_tree(&bytes).is_err());
    }

    #[test]
    fn colors() {
        assert_eq!(fill_color(1.0), "#399de5");
        assert_eq!(fill_color(0.0), "#e58139");
        assert_eq!(fill_color(0.5), "#ffffff");
    }
}
