//! Confusion-matrix metrics and pairwise AUROC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_predictions(y_true: &[u8], y_pred: &[u8]) -> Confusion {
        let mut c = Confusion::default();
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t == 1, p == 1) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn merge(self, other: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetTag {
    Raw,
    Cleaned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetTag>,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Absent when the evaluated rows hold a single class.
    pub auroc: Option<f64>,
    pub confusion: Confusion,
    /// Metrics whose denominator was zero and were reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_fold: Vec<EvaluationReport>,
}

impl EvaluationReport {
    /// Metrics derived from confusion counts, with a given AUROC.
    pub fn from_confusion(confusion: Confusion, auroc: Option<f64>) -> EvaluationReport {
        let Confusion { tp, fp, fn_, tn } = confusion;
        let mut undefined = Vec::new();
        let div = |num: usize, den: usize, name: &str, undefined: &mut Vec<String>| {
            if den == 0 {
                undefined.push(name.to_string());
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let accuracy = div(tp + tn, confusion.total(), "accuracy", &mut undefined);
        let precision = div(tp, tp + fp, "precision", &mut undefined);
        let recall = div(tp, tp + fn_, "recall", &mut undefined);
        let f1 = if precision + recall == 0.0 {
            undefined.push("f1".to_string());
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvaluationReport {
            model: None,
            dataset: None,
            accuracy,
            precision,
            recall,
            f1,
            auroc,
            confusion,
            undefined,
            per_fold: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Fraction of (positive, negative) pairs where the positive scores
/// higher; ties count one half. `None` unless both classes are present.
pub fn auroc(y_true: &[u8], y_score: &[f64]) -> Option<f64> {
    let pos: Vec<f64> = y_true.iter().zip(y_score).filter(|(y, _)| **y == 1).map(|(_, s)| *s).collect();
    let neg: Vec<f64> = y_true.iter().zip(y_score).filter(|(y, _)| **y != 1).map(|(_, s)| *s).collect();
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for p in &pos {
        for n in &neg {
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    Some(wins / (pos.len() as f64 * neg.len() as f64))
}

pub fn compute_metrics(y_true: &[u8], y_pred: &[u8], y_score: Option<&[f64]>) -> Result<EvaluationReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if let Some(s) = y_score {
        if s.len() != y_true.len() {
            return Err(Error::Shape(format!("{} labels but {} scores", y_true.len(), s.len())));
        }
    }
    let confusion = Confusion::from_predictions(y_true, y_pred);
    let auc = y_score.and_then(|s| auroc(y_true, s));
    Ok(EvaluationReport::from_confusion(confusion, auc))
}
