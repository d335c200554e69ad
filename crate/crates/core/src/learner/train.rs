// SPDX-License-Identifier: Apache-2.0

//! Greedy CART-style growth with class-weighted Gini impurity.

use sha2::{Digest, Sha256};

use super::{ClassWeight, DecisionTree, LeafScore, LearnerError, NodeStats, Split, TrainConfig, TreeNode};
use crate::dataset::{Feature, FeatureVector, Label};

/// `1 - Σ (m_c / M)^2` over the two class masses.
pub fn gini_impurity(mass: [f64; 2]) -> Result<f64, LearnerError> {
    let total = mass[0] + mass[1];
    if total <= 0.0 {
        return Err(LearnerError::EmptyNode);
    }
    let (p0, p1) = (mass[0] / total, mass[1] / total);
    Ok(1.0 - (p0 * p0 + p1 * p1))
}

/// `w_c = N / (2 N_c)`: both classes end up with total mass `N / 2`.
pub fn balanced_weights(counts: [usize; 2]) -> Result<[f64; 2], LearnerError> {
    if counts[0] == 0 || counts[1] == 0 {
        return Err(LearnerError::DegenerateLabels {
            not_feasible: counts[0],
            feasible: counts[1],
        });
    }
    let n = (counts[0] + counts[1]) as f64;
    Ok([n / (2.0 * counts[0] as f64), n / (2.0 * counts[1] as f64)])
}

/// Mass-weighted impurity `M * gini`, i.e. `M - Σ m_c^2 / M`.
fn mass_impurity(mass: [f64; 2]) -> f64 {
    let total = mass[0] + mass[1];
    if total <= 0.0 {
        return 0.0;
    }
    total - (mass[0] * mass[0] + mass[1] * mass[1]) / total
}

/// Weighted impurity decrease of sending `left` mass one way and the rest
/// of `parent` the other way.
pub fn split_gain(parent: [f64; 2], left: [f64; 2]) -> f64 {
    let right = [parent[0] - left[0], parent[1] - left[1]];
    mass_impurity(parent) - mass_impurity(left) - mass_impurity(right)
}

/// Relative slack for treating two gains as equal.
const GAIN_TIE: f64 = 1e-12;

struct Grower<'a> {
    columns: [Vec<f64>; 3],
    labels: Vec<usize>,
    weights: [f64; 2],
    n_total: usize,
    config: &'a TrainConfig,
}

impl Grower<'_> {
    fn mass(&self, counts: [usize; 2]) -> [f64; 2] {
        [counts[0] as f64 * self.weights[0], counts[1] as f64 * self.weights[1]]
    }

    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let mut c = [0, 0];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn grow(&self, idx: &[usize], depth: usize) -> TreeNode {
        let counts = self.counts(idx);
        let value = self.mass(counts);
        let stats = NodeStats {
            value,
            gini: gini_impurity(value).unwrap_or(0.0),
            samples_frac: Some(idx.len() as f64 / self.n_total as f64),
        };
        let pure = counts[0] == 0 || counts[1] == 0;
        let split = if depth >= self.config.max_depth || pure || idx.len() < self.config.min_samples_split {
            None
        } else {
            self.best_split(idx, value)
        };
        match split {
            Some(split) => {
                let (left, right): (Vec<usize>, Vec<usize>) = idx
                    .iter()
                    .partition(|&&i| self.columns[split.feature.index()][i] <= split.threshold);
                TreeNode::Internal {
                    split,
                    stats: Some(stats),
                    left: Box::new(self.grow(&left, depth + 1)),
                    right: Box::new(self.grow(&right, depth + 1)),
                }
            }
            None => {
                let score = match self.config.leaf_score {
                    LeafScore::Weighted => stats.feasible_share(),
                    LeafScore::Raw => counts[1] as f64 / idx.len() as f64,
                };
                TreeNode::Leaf { score, stats }
            }
        }
    }

    /// Best midpoint split by impurity decrease; ties keep the lowest
    /// feature index, then the lowest threshold.
    fn best_split(&self, idx: &[usize], parent: [f64; 2]) -> Option<Split> {
        let tie = GAIN_TIE * (parent[0] + parent[1]);
        let mut best: Option<(Split, f64)> = None;
        let mut order = idx.to_vec();
        for feature in Feature::ALL {
            let col = &self.columns[feature.index()];
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            let mut left = [0usize; 2];
            for k in 0..order.len() - 1 {
                left[self.labels[order[k]]] += 1;
                let (lo, hi) = (col[order[k]], col[order[k + 1]]);
                if lo == hi {
                    continue;
                }
                let gain = split_gain(parent, self.mass(left));
                if gain <= tie {
                    continue;
                }
                if best.is_none_or(|(_, g)| gain > g + tie) {
                    best = Some((
                        Split {
                            feature,
                            threshold: midpoint(lo, hi),
                        },
                        gain,
                    ));
                }
            }
        }
        best.map(|(s, _)| s)
    }
}

/// Midpoint that still separates `lo` from `hi` under `<=`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

pub fn train(samples: &[(FeatureVector, Label)], config: &TrainConfig) -> Result<DecisionTree, LearnerError> {
    config.validate()?;
    if samples.len() < config.min_samples_split {
        return Err(LearnerError::TooFewSamples {
            n: samples.len(),
            min: config.min_samples_split,
        });
    }
    let mut counts = [0usize; 2];
    for (i, (f, label)) in samples.iter().enumerate() {
        if !f.as_array().iter().all(|v| v.is_finite()) {
            return Err(LearnerError::NonFiniteFeature(i));
        }
        counts[label.index()] += 1;
    }
    let balanced = balanced_weights(counts)?;
    let weights = match config.class_weight {
        ClassWeight::Balanced => balanced,
        ClassWeight::Uniform => [1.0, 1.0],
    };

    let columns = Feature::ALL.map(|feat| samples.iter().map(|(f, _)| f.get(feat)).collect::<Vec<_>>());
    let grower = Grower {
        columns,
        labels: samples.iter().map(|(_, l)| l.index()).collect(),
        weights,
        n_total: samples.len(),
        config,
    };
    let all: Vec<usize> = (0..samples.len()).collect();
    let root = grower.grow(&all, 0);
    Ok(DecisionTree {
        root,
        config: *config,
        model_id: model_id(samples, config),
        class_weights: Some(weights),
    })
}

fn model_id(samples: &[(FeatureVector, Label)], config: &TrainConfig) -> String {
    let mut h = Sha256::new();
    h.update(format!("{config:?}").as_bytes());
    for (f, label) in samples {
        for v in f.as_array() {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update([label.index() as u8]);
    }
    let digest = h.finalize();
    let hex: String = digest.iter().take(6).map(|b| format!("{b:02x}")).collect();
    format!("trained-{hex}")
}
