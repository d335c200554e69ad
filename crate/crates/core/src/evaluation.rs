// SPDX-License-Identifier: Apache-2.0

//! Confusion matrices, balanced accuracy and leave-one-project-out
//! cross-validation.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{split_by_project, DesignRecord, Label};
use crate::learner::{train, DecisionTree, LearnerError, PredictError, TrainConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("balanced accuracy needs both classes among the actual labels")]
    OneClassOnly,
    #[error("need at least 2 projects with a not_feasible record, found {0}")]
    InsufficientFolds(usize),
    #[error("training set without project {project_id} lacks one class")]
    DegenerateTrainingFold { project_id: String },
    #[error("record {0} has no label")]
    Unlabeled(String),
    #[error("training failed: {0}")]
    Training(#[from] LearnerError),
}

/// Positive class is `feasible`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn record(&mut self, actual: Label, predicted: Label) {
        match (actual, predicted) {
            (Label::Feasible, Label::Feasible) => self.tp += 1,
            (Label::Feasible, Label::NotFeasible) => self.fn_ += 1,
            (Label::NotFeasible, Label::NotFeasible) => self.tn += 1,
            (Label::NotFeasible, Label::Feasible) => self.fp += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }
}

/// `(TPR + TNR) / 2`.
pub fn balanced_accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    if cm.positives() == 0 || cm.negatives() == 0 {
        return Err(EvalError::OneClassOnly);
    }
    let tpr = cm.tp as f64 / cm.positives() as f64;
    let tnr = cm.tn as f64 / cm.negatives() as f64;
    Ok((tpr + tnr) / 2.0)
}

/// Mean recall over the classes that actually occur. Equals
/// [`balanced_accuracy`] when both classes are present and degrades to the
/// single-class recall otherwise; `None` for an empty matrix.
pub fn macro_recall(cm: &ConfusionMatrix) -> Option<f64> {
    let mut recalls = Vec::with_capacity(2);
    if cm.positives() > 0 {
        recalls.push(cm.tp as f64 / cm.positives() as f64);
    }
    if cm.negatives() > 0 {
        recalls.push(cm.tn as f64 / cm.negatives() as f64);
    }
    (!recalls.is_empty()).then(|| recalls.iter().sum::<f64>() / recalls.len() as f64)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConfusionOutcome {
    pub matrix: ConfusionMatrix,
    /// Design ids the model refused to score.
    pub unsupported: Vec<String>,
}

pub fn confusion(tree: &DecisionTree, records: &[DesignRecord], cutoff: f64) -> Result<ConfusionOutcome, EvalError> {
    let mut out = ConfusionOutcome::default();
    for r in records {
        let actual = r.label.ok_or_else(|| EvalError::Unlabeled(r.design_id.clone()))?;
        match tree.predict_class(&r.features(), cutoff) {
            Ok(predicted) => out.matrix.record(actual, predicted),
            Err(PredictError::UnsupportedRegion { .. }) | Err(PredictError::InvalidInput(_)) => {
                out.unsupported.push(r.design_id.clone())
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub project_id: String,
    pub n_test: usize,
    pub confusion: ConfusionMatrix,
    pub balanced_accuracy: f64,
    /// Test fold holds a single class; `balanced_accuracy` is that class's recall.
    pub single_class: bool,
    pub unsupported: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldSummary {
    pub mean: f64,
    /// Population convention (divide by n).
    pub std_dev: f64,
    /// Sample convention (divide by n - 1); `None` for a single fold.
    pub sample_std_dev: Option<f64>,
}

impl FoldSummary {
    pub fn from_accuracies(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = if values.iter().all(|v| *v == values[0]) {
            values[0]
        } else {
            values.iter().sum::<f64>() / n
        };
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        Some(Self {
            mean,
            std_dev: (ss / n).sqrt(),
            sample_std_dev: (values.len() > 1).then(|| (ss / (n - 1.0)).sqrt()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub folds: Vec<FoldResult>,
    #[serde(flatten)]
    pub summary: FoldSummary,
}

impl EvaluationReport {
    pub fn mean(&self) -> f64 {
        self.summary.mean
    }

    pub fn std_dev(&self) -> f64 {
        self.summary.std_dev
    }
}

fn labeled_samples(records: &[&DesignRecord]) -> Result<Vec<(crate::dataset::FeatureVector, Label)>, EvalError> {
    records
        .iter()
        .map(|r| {
            r.label
                .map(|l| (r.features(), l))
                .ok_or_else(|| EvalError::Unlabeled(r.design_id.clone()))
        })
        .collect()
}

/// One fold per project that contains a `not_feasible` record: that
/// project is the test set, everything else trains. Folds are ordered by
/// project id and run in parallel.
pub fn loo_by_project_cv(records: &[DesignRecord], config: &TrainConfig) -> Result<EvaluationReport, EvalError> {
    if let Some(r) = records.iter().find(|r| r.label.is_none()) {
        return Err(EvalError::Unlabeled(r.design_id.clone()));
    }
    let groups = split_by_project(records);
    let fold_ids: Vec<&String> = groups
        .iter()
        .filter(|(_, g)| g.is_foldable())
        .map(|(id, _)| id)
        .collect();
    if fold_ids.len() < 2 {
        return Err(EvalError::InsufficientFolds(fold_ids.len()));
    }

    let folds = fold_ids
        .par_iter()
        .map(|&project_id| -> Result<FoldResult, EvalError> {
            let (test, train_set): (Vec<&DesignRecord>, Vec<&DesignRecord>) =
                records.iter().partition(|r| &r.project_id == project_id);
            let samples = labeled_samples(&train_set)?;
            let tree = match train(&samples, config) {
                Ok(t) => t,
                Err(LearnerError::DegenerateLabels { .. }) => {
                    return Err(EvalError::DegenerateTrainingFold {
                        project_id: project_id.clone(),
                    })
                }
                Err(e) => return Err(e.into()),
            };
            let test: Vec<DesignRecord> = test.into_iter().cloned().collect();
            let outcome = confusion(&tree, &test, crate::learner::DEFAULT_CUTOFF)?;
            let cm = outcome.matrix;
            let single_class = cm.positives() == 0 || cm.negatives() == 0;
            Ok(FoldResult {
                project_id: project_id.clone(),
                n_test: test.len(),
                confusion: cm,
                balanced_accuracy: macro_recall(&cm).unwrap_or(0.0),
                single_class,
                unsupported: outcome.unsupported,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let accuracies: Vec<f64> = folds.iter().map(|f| f.balanced_accuracy).collect();
    let summary = FoldSummary::from_accuracies(&accuracies).expect("at least two folds");
    Ok(EvaluationReport { folds, summary })
}

impl fmt::Display for EvaluationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<6} {:<16} {:>18}", "Fold", "Project", "Balanced Accuracy")?;
        for (i, fold) in self.folds.iter().enumerate() {
            let mark = if fold.single_class { " *" } else { "" };
            writeln!(
                f,
                "{:<6} {:<16} {:>17.2}%{mark}",
                i + 1,
                fold.project_id,
                100.0 * fold.balanced_accuracy
            )?;
        }
        write!(
            f,
            "Mean ± StdDev {:>22}",
            format!(
                "({:.2} ± {:.2}) %",
                100.0 * self.summary.mean,
                100.0 * self.summary.std_dev
            )
        )?;
        if let Some(s) = self.summary.sample_std_dev {
            write!(f, "\nsample std dev {:>20.2} %", 100.0 * s)?;
        }
        if self.folds.iter().any(|x| x.single_class) {
            write!(f, "\n* test fold holds one class; recall of that class shown")?;
        }
        Ok(())
    }
}
