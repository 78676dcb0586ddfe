//! Stratified k-fold cross-validation.

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, Confusion, EvaluationReport};
use super::split::stratified_folds;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::models::{Classifier, ModelConfig, ModelKind, ScaledModel};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    #[default]
    Accuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvConfig {
    pub k: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub selection_metric: SelectionMetric,
    pub threshold: f64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 10,
            train_fraction: 0.8,
            seed: 0,
            selection_metric: SelectionMetric::Accuracy,
            threshold: 0.5,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!("fold count must be >= 2, got {}", self.k)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold must lie in [0, 1], got {}", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    /// Summary over all folds; `per_fold` holds one report per fold.
    pub report: EvaluationReport,
    pub folds: Vec<Vec<usize>>,
    /// Validation-fold probability for every row.
    pub oof_scores: Vec<f64>,
}

/// Cross-validates an arbitrary learner. `fit` receives the training part
/// of each fold and the fold index.
///
/// Accuracy, precision, recall and F1 of the summary come from the pooled
/// confusion counts; AUROC is the mean over folds where it is defined.
pub fn cross_validate<F, C>(x: &FeatureMatrix, cv: &CvConfig, mut fit: F) -> Result<CvOutcome>
where
    F: FnMut(&FeatureMatrix, usize) -> Result<C>,
    C: Classifier,
{
    cv.validate()?;
    let folds = stratified_folds(x.labels(), cv.k, &mut rng::stream(cv.seed, "cv-folds", 0))?;
    let mut fold_of = vec![0usize; x.n_rows()];
    for (f, fold) in folds.iter().enumerate() {
        for &i in fold {
            fold_of[i] = f;
        }
    }
    let mut oof_scores = vec![0.0; x.n_rows()];
    let mut per_fold = Vec::with_capacity(cv.k);
    let mut pooled = Confusion::default();
    for (f, fold) in folds.iter().enumerate() {
        let train: Vec<usize> = (0..x.n_rows()).filter(|&i| fold_of[i] != f).collect();
        let model = fit(&x.select_rows(&train), f)?;
        let valid = x.select_rows(fold);
        let scores = model.predict_proba(&valid)?;
        let preds: Vec<u8> = scores.iter().map(|&p| u8::from(p >= cv.threshold)).collect();
        let report = compute_metrics(valid.labels(), &preds, Some(&scores))?;
        pooled = pooled.merge(report.confusion);
        for (&i, &s) in fold.iter().zip(&scores) {
            oof_scores[i] = s;
        }
        per_fold.push(report);
    }
    let aucs: Vec<f64> = per_fold.iter().filter_map(|r| r.auroc).collect();
    let mean_auc = (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64);
    let mut report = EvaluationReport::from_confusion(pooled, mean_auc);
    report.per_fold = per_fold;
    Ok(CvOutcome {
        report,
        folds,
        oof_scores,
    })
}

/// Seed handed to the model trained for fold `fold`.
pub fn cv_fold_seed(seed: u64, fold: usize) -> u64 {
    rng::derive_seed(seed, "cv-fold", fold as u64)
}

/// k-fold CV of one model kind; the scaler is refit inside every fold.
pub fn kfold_cv(x: &FeatureMatrix, kind: ModelKind, config: &ModelConfig, cv: &CvConfig) -> Result<CvOutcome> {
    let mut out = cross_validate(x, cv, |train, f| ScaledModel::fit(kind, train, config, cv_fold_seed(cv.seed, f)))?;
    out.report.model = Some(kind);
    for r in &mut out.report.per_fold {
        r.model = Some(kind);
    }
    Ok(out)
}
