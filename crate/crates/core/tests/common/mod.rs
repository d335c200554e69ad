// SPDX-License-Identifier: Apache-2.0

//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use feascore::learner::TreeNode;
use feascore::{Feature, FeatureVector, Label};

pub type Sample = (FeatureVector, Label);

/// Weighted Gini written out directly from class fractions.
fn weighted_gini(samples: &[&Sample], w: [f64; 2]) -> (f64, f64) {
    let mut m = [0.0, 0.0];
    for (_, l) in samples {
        m[l.index()] += w[l.index()];
    }
    let total = m[0] + m[1];
    if total == 0.0 {
        return (0.0, 0.0);
    }
    let g = 1.0 - (m[0] / total).powi(2) - (m[1] / total).powi(2);
    (total, g)
}

#[derive(Debug, Clone, Copy)]
pub struct OracleSplit {
    pub feature: Feature,
    pub threshold: f64,
    pub gain: f64,
}

/// Every (feature, midpoint) candidate with its impurity decrease, in
/// feature order then threshold order.
pub fn all_candidates(samples: &[&Sample], w: [f64; 2]) -> Vec<OracleSplit> {
    let (m, g) = weighted_gini(samples, w);
    let mut out = Vec::new();
    for feature in Feature::ALL {
        let mut values: Vec<f64> = samples.iter().map(|(f, _)| f.get(feature)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let t = (pair[0] + pair[1]) / 2.0;
            let (left, right): (Vec<&Sample>, Vec<&Sample>) = samples.iter().partition(|(f, _)| f.get(feature) <= t);
            let (ml, gl) = weighted_gini(&left, w);
            let (mr, gr) = weighted_gini(&right, w);
            out.push(OracleSplit {
                feature,
                threshold: t,
                gain: m * g - ml * gl - mr * gr,
            });
        }
    }
    out
}

/// Brute-force best split: max decrease, ties to the first candidate.
pub fn best_split(samples: &[&Sample], w: [f64; 2]) -> Option<OracleSplit> {
    let (m, _) = weighted_gini(samples, w);
    let tol = 1e-9 * m.max(1.0);
    let cands = all_candidates(samples, w);
    let max = cands.iter().map(|c| c.gain).fold(f64::NEG_INFINITY, f64::max);
    if max.is_nan() || max <= tol {
        return None;
    }
    cands.into_iter().find(|c| c.gain >= max - tol)
}

/// Walks a trained tree and checks every node against the oracle.
/// Returns a description of the first mismatch.
pub fn check_splits(
    node: &TreeNode,
    samples: &[&Sample],
    w: [f64; 2],
    depth: usize,
    max_depth: usize,
) -> Result<(), String> {
    match node {
        TreeNode::Internal { split, left, right, .. } => {
            let oracle = best_split(samples, w)
                .ok_or_else(|| format!("depth {depth}: split {split:?} where oracle finds no gain"))?;
            let chosen_left: Vec<bool> = samples
                .iter()
                .map(|(f, _)| f.get(split.feature) <= split.threshold)
                .collect();
            let oracle_left: Vec<bool> = samples
                .iter()
                .map(|(f, _)| f.get(oracle.feature) <= oracle.threshold)
                .collect();
            if split.feature != oracle.feature
                || chosen_left != oracle_left
                || (split.threshold - oracle.threshold).abs() > 1e-9 * oracle.threshold.abs().max(1.0)
            {
                return Err(format!("depth {depth}: train chose {split:?}, oracle {oracle:?}"));
            }
            let (l, r): (Vec<&Sample>, Vec<&Sample>) = samples.iter().partition(|(f, _)| split.goes_left(f));
            check_splits(left, &l, w, depth + 1, max_depth)?;
            check_splits(right, &r, w, depth + 1, max_depth)
        }
        TreeNode::Leaf { .. } => {
            let pure = samples.iter().all(|(_, l)| *l == samples[0].1);
            if depth < max_depth && !pure && samples.len() >= 2 {
                if let Some(o) = best_split(samples, w) {
                    return Err(format!("depth {depth}: leaf where oracle would split {o:?}"));
                }
            }
            Ok(())
        }
        TreeNode::Unknown => Err("trained tree contains an unknown leaf".into()),
    }
}

/// Samples reaching each internal node, keyed by preorder index.
pub fn node_samples<'a>(node: &TreeNode, samples: Vec<&'a Sample>, out: &mut Vec<(TreeNode, Vec<&'a Sample>)>) {
    if let TreeNode::Internal { split, left, right, .. } = node {
        out.push((node.clone(), samples.clone()));
        let (l, r): (Vec<&Sample>, Vec<&Sample>) = samples.into_iter().partition(|(f, _)| split.goes_left(f));
        node_samples(left, l, out);
        node_samples(right, r, out);
    }
}

pub fn class_weights(samples: &[Sample]) -> [f64; 2] {
    let n1 = samples.iter().filter(|(_, l)| *l == Label::Feasible).count() as f64;
    let n = samples.len() as f64;
    let n0 = n - n1;
    [n / (2.0 * n0), n / (2.0 * n1)]
}

/// Small random dataset from an integer-grid generator so that ties and
/// repeated values are common.
pub fn grid_dataset(rng: &mut impl rand::Rng, n: usize) -> Vec<Sample> {
    loop {
        let data: Vec<Sample> = (0..n)
            .map(|_| {
                let f = FeatureVector::new(
                    f64::from(rng.random_range(1..=10)) / 10.0,
                    rng.random_range(2..=6),
                    f64::from(rng.random_range(100..=200)) / 2.0,
                );
                (
                    f,
                    if rng.random_bool(0.5) {
                        Label::Feasible
                    } else {
                        Label::NotFeasible
                    },
                )
            })
            .collect();
        let nf = data.iter().filter(|(_, l)| *l == Label::NotFeasible).count();
        if nf > 0 && nf < data.len() {
            return data;
        }
    }
}
