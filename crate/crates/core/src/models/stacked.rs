//! Two-level stack: logistic meta model over out-of-fold probabilities of
//! the four base classifiers.

use serde::{Deserialize, Serialize};

use super::forest::ForestModel;
use super::logistic::LogisticModel;
use super::mlp::MlpModel;
use super::naive_bayes::GaussianNbModel;
use super::{check_trainable, ModelConfig};
use crate::error::{Error, Result};
use crate::evaluation::split::stratified_folds;
use crate::features::FeatureMatrix;
use crate::rng;

pub const META_FEATURES: [&str; 4] = ["p_logistic", "p_naive_bayes", "p_random_forest", "p_neural_network"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StackConfig {
    pub oof_folds: usize,
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig { oof_folds: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseModels {
    pub logistic: LogisticModel,
    pub naive_bayes: GaussianNbModel,
    pub random_forest: ForestModel,
    pub neural_network: MlpModel,
}

impl BaseModels {
    pub fn fit(x: &FeatureMatrix, config: &ModelConfig, seed: u64) -> Result<Self> {
        Ok(BaseModels {
            logistic: LogisticModel::fit(x, &config.logistic)?,
            naive_bayes: GaussianNbModel::fit(x, &config.naive_bayes)?,
            random_forest: ForestModel::fit(x, &config.forest, rng::derive_seed(seed, "forest", 0))?,
            neural_network: MlpModel::fit(x, &config.mlp, rng::derive_seed(seed, "mlp", 0))?,
        })
    }

    pub fn probabilities(&self, row: &[f64]) -> [f64; 4] {
        [
            self.logistic.probability(row),
            self.naive_bayes.probability(row),
            self.random_forest.probability(row),
            self.neural_network.probability(row),
        ]
    }
}

/// Out-of-fold base-model probabilities: row `i` is scored by models fit
/// on the folds that do not contain `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutOfFold {
    pub predictions: Vec<[f64; 4]>,
    pub folds: Vec<Vec<usize>>,
}

impl OutOfFold {
    pub fn meta_matrix(&self, labels: &[u8]) -> Result<FeatureMatrix> {
        let rows: Vec<Vec<f64>> = self.predictions.iter().map(|p| p.to_vec()).collect();
        FeatureMatrix::from_rows(
            &rows,
            META_FEATURES.iter().map(|s| s.to_string()).collect(),
            labels.to_vec(),
        )
    }
}

/// Seed for the base models trained without fold `fold`.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    rng::derive_seed(seed, "stack-fold", fold as u64)
}

pub fn out_of_fold(x: &FeatureMatrix, config: &ModelConfig, seed: u64) -> Result<OutOfFold> {
    let k = config.stacking.oof_folds;
    let folds = stratified_folds(x.labels(), k, &mut rng::stream(seed, "stacking", 0))?;
    let mut predictions = vec![[0.0; 4]; x.n_rows()];
    let mut in_fold = vec![usize::MAX; x.n_rows()];
    for (f, fold) in folds.iter().enumerate() {
        for &i in fold {
            in_fold[i] = f;
        }
    }
    for (f, fold) in folds.iter().enumerate() {
        let train: Vec<usize> = (0..x.n_rows()).filter(|&i| in_fold[i] != f).collect();
        let base = BaseModels::fit(&x.select_rows(&train), config, fold_seed(seed, f))?;
        for &i in fold {
            predictions[i] = base.probabilities(x.row(i));
        }
    }
    Ok(OutOfFold { predictions, folds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel {
    pub base: BaseModels,
    pub meta: LogisticModel,
    pub oof_folds: usize,
}

impl StackedModel {
    pub fn fit(x: &FeatureMatrix, config: &ModelConfig, seed: u64) -> Result<Self> {
        check_trainable(x)?;
        let k = config.stacking.oof_folds;
        let per_class = [0u8, 1].map(|c| x.labels().iter().filter(|&&y| y == c).count());
        if per_class.iter().any(|&n| n < k) {
            return Err(Error::Training(format!(
                "stacking with {k} folds needs at least {k} rows per class, got {per_class:?}"
            )));
        }
        let oof = out_of_fold(x, config, seed)?;
        let meta = LogisticModel::fit(&oof.meta_matrix(x.labels())?, &config.logistic)?;
        let base = BaseModels::fit(x, config, rng::derive_seed(seed, "stack-final", 0))?;
        Ok(StackedModel {
            base,
            meta,
            oof_folds: k,
        })
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        self.meta.probability(&self.base.probabilities(row))
    }
}
