//! The five classifiers behind one predict-probability contract.

pub mod forest;
pub mod logistic;
pub mod mlp;
pub mod naive_bayes;
pub mod stacked;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use forest::{DecisionTree, ForestConfig, ForestModel, Node};
pub use logistic::{LogisticConfig, LogisticModel};
pub use mlp::{MlpConfig, MlpModel};
pub use naive_bayes::{GaussianNbModel, NaiveBayesConfig};
pub use stacked::{BaseModels, StackConfig, StackedModel};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Scaler};
use crate::rng;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Logistic function, stable for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_trainable(x: &FeatureMatrix) -> Result<()> {
    if x.n_rows() == 0 {
        return Err(Error::Training("empty training matrix".into()));
    }
    if x.n_features() == 0 {
        return Err(Error::Training("training matrix has no features".into()));
    }
    Ok(())
}

pub(crate) fn check_finite(x: &FeatureMatrix) -> Result<()> {
    let w = x.n_features().max(1);
    match x.values().iter().position(|v| !v.is_finite()) {
        Some(k) => Err(Error::NonFinite {
            feature: x.feature_names()[k % w].clone(),
            row: k / w,
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    LogisticRegression,
    NaiveBayes,
    RandomForest,
    NeuralNetwork,
    StackedEnsemble,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::LogisticRegression,
        ModelKind::NaiveBayes,
        ModelKind::RandomForest,
        ModelKind::NeuralNetwork,
        ModelKind::StackedEnsemble,
    ];

    /// Tie-break rank for model selection; lower wins.
    pub fn precedence(self) -> usize {
        match self {
            ModelKind::StackedEnsemble => 0,
            ModelKind::LogisticRegression => 1,
            ModelKind::NaiveBayes => 2,
            ModelKind::RandomForest => 3,
            ModelKind::NeuralNetwork => 4,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "Logistic Regression",
            ModelKind::NaiveBayes => "Naive Bayes",
            ModelKind::RandomForest => "Random Forest",
            ModelKind::NeuralNetwork => "Neural Network",
            ModelKind::StackedEnsemble => "Stacked Ensemble",
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::NaiveBayes => "naive_bayes",
            ModelKind::RandomForest => "random_forest",
            ModelKind::NeuralNetwork => "neural_network",
            ModelKind::StackedEnsemble => "stacked_ensemble",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', ' '], "_");
        let kind = match key.as_str() {
            "logistic_regression" | "logistic" | "lr" => ModelKind::LogisticRegression,
            "naive_bayes" | "nb" => ModelKind::NaiveBayes,
            "random_forest" | "forest" | "rf" => ModelKind::RandomForest,
            "neural_network" | "mlp" | "nn" => ModelKind::NeuralNetwork,
            "stacked_ensemble" | "stacked" | "stack" => ModelKind::StackedEnsemble,
            _ => return Err(Error::Config(format!("unknown model kind `{s}`"))),
        };
        Ok(kind)
    }
}

/// Hyperparameters for every model kind.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub logistic: LogisticConfig,
    pub naive_bayes: NaiveBayesConfig,
    pub forest: ForestConfig,
    pub mlp: MlpConfig,
    pub stacking: StackConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum Model {
    LogisticRegression(LogisticModel),
    NaiveBayes(GaussianNbModel),
    RandomForest(ForestModel),
    NeuralNetwork(MlpModel),
    StackedEnsemble(StackedModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::LogisticRegression(_) => ModelKind::LogisticRegression,
            Model::NaiveBayes(_) => ModelKind::NaiveBayes,
            Model::RandomForest(_) => ModelKind::RandomForest,
            Model::NeuralNetwork(_) => ModelKind::NeuralNetwork,
            Model::StackedEnsemble(_) => ModelKind::StackedEnsemble,
        }
    }

    fn probability(&self, row: &[f64]) -> f64 {
        let p = match self {
            Model::LogisticRegression(m) => m.probability(row),
            Model::NaiveBayes(m) => m.probability(row),
            Model::RandomForest(m) => m.probability(row),
            Model::NeuralNetwork(m) => m.probability(row),
            Model::StackedEnsemble(m) => m.probability(row),
        };
        p.clamp(0.0, 1.0)
    }
}

/// Anything that maps a feature matrix to positive-class probabilities.
pub trait Classifier {
    fn feature_names(&self) -> &[String];

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>>;

    fn predict(&self, x: &FeatureMatrix, threshold: f64) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p >= threshold))
            .collect())
    }
}

/// A fitted model bound to the feature names it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub training_seed: u64,
    pub model: Model,
}

impl TrainedClassifier {
    pub fn new(model: Model, feature_names: Vec<String>, training_seed: u64) -> Self {
        TrainedClassifier {
            format_version: MODEL_FORMAT_VERSION,
            feature_names,
            training_seed,
            model,
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedClassifier = serde_json::from_str(text)?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                model.format_version
            )));
        }
        Ok(model)
    }
}

impl Classifier for TrainedClassifier {
    fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        x.check_features(&self.feature_names)?;
        Ok(x.rows().take(x.n_rows()).map(|r| self.model.probability(r)).collect())
    }
}

pub fn train_logistic(x: &FeatureMatrix, config: &LogisticConfig) -> Result<TrainedClassifier> {
    let m = LogisticModel::fit(x, config)?;
    Ok(TrainedClassifier::new(Model::LogisticRegression(m), x.feature_names().to_vec(), 0))
}

pub fn train_naive_bayes(x: &FeatureMatrix, config: &NaiveBayesConfig) -> Result<TrainedClassifier> {
    let m = GaussianNbModel::fit(x, config)?;
    Ok(TrainedClassifier::new(Model::NaiveBayes(m), x.feature_names().to_vec(), 0))
}

pub fn train_random_forest(x: &FeatureMatrix, config: &ForestConfig, seed: u64) -> Result<TrainedClassifier> {
    let m = ForestModel::fit(x, config, seed)?;
    Ok(TrainedClassifier::new(Model::RandomForest(m), x.feature_names().to_vec(), seed))
}

pub fn train_mlp(x: &FeatureMatrix, config: &MlpConfig, seed: u64) -> Result<TrainedClassifier> {
    let m = MlpModel::fit(x, config, seed)?;
    Ok(TrainedClassifier::new(Model::NeuralNetwork(m), x.feature_names().to_vec(), seed))
}

pub fn train_stacked(x: &FeatureMatrix, config: &ModelConfig, seed: u64) -> Result<TrainedClassifier> {
    let m = StackedModel::fit(x, config, seed)?;
    Ok(TrainedClassifier::new(Model::StackedEnsemble(m), x.feature_names().to_vec(), seed))
}

/// Trains one model kind. `seed` is the pipeline seed; each kind draws
/// from its own named sub-stream.
pub fn train(kind: ModelKind, x: &FeatureMatrix, config: &ModelConfig, seed: u64) -> Result<TrainedClassifier> {
    match kind {
        ModelKind::LogisticRegression => train_logistic(x, &config.logistic),
        ModelKind::NaiveBayes => train_naive_bayes(x, &config.naive_bayes),
        ModelKind::RandomForest => train_random_forest(x, &config.forest, rng::derive_seed(seed, "forest", 0)),
        ModelKind::NeuralNetwork => train_mlp(x, &config.mlp, rng::derive_seed(seed, "mlp", 0)),
        ModelKind::StackedEnsemble => train_stacked(x, config, seed),
    }
}

pub fn predict_proba(model: &TrainedClassifier, x: &FeatureMatrix) -> Result<Vec<f64>> {
    model.predict_proba(x)
}

pub fn predict(model: &TrainedClassifier, x: &FeatureMatrix, threshold: f64) -> Result<Vec<u8>> {
    model.predict(x, threshold)
}

/// Scaler fit on the training rows together with the model fit on the
/// scaled rows. Accepts unscaled matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledModel {
    pub scaler: Scaler,
    pub classifier: TrainedClassifier,
}

impl ScaledModel {
    pub fn fit(kind: ModelKind, train: &FeatureMatrix, config: &ModelConfig, seed: u64) -> Result<Self> {
        let scaler = Scaler::fit(train);
        let scaled = scaler.apply(train)?;
        let classifier = self::train(kind, &scaled, config, seed)?;
        Ok(ScaledModel { scaler, classifier })
    }

    pub fn kind(&self) -> ModelKind {
        self.classifier.kind()
    }
}

impl Classifier for ScaledModel {
    fn feature_names(&self) -> &[String] {
        &self.classifier.feature_names
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        x.check_features(&self.classifier.feature_names)?;
        self.classifier.predict_proba(&self.scaler.apply(x)?)
    }
}

pub fn load_model(path: &Path) -> Result<TrainedClassifier> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainedClassifier::from_json(&text)
}
