//! Feature importance: logistic coefficients and permutation importance.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::models::{Classifier, Model, TrainedClassifier};
use crate::rng;

pub const DEFAULT_REPEATS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceMethod {
    Coefficient,
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub importance: f64,
    /// Coefficient with its sign; coefficient method only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signed_weight: Option<f64>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: ImportanceMethod,
    pub entries: Vec<ImportanceEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Explanation {
    fn ranked(method: ImportanceMethod, mut entries: Vec<ImportanceEntry>) -> Self {
        entries.sort_by(|a, b| b.importance.total_cmp(&a.importance).then_with(|| a.feature.cmp(&b.feature)));
        for (i, e) in entries.iter_mut().enumerate() {
            e.rank = i + 1;
        }
        Explanation {
            method,
            entries,
            repeats: None,
            seed: None,
        }
    }

    pub fn entry(&self, feature: &str) -> Option<&ImportanceEntry> {
        self.entries.iter().find(|e| e.feature == feature)
    }

    /// Feature names from rank 1 downwards.
    pub fn ranking(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.feature.as_str()).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["feature", "importance", "signed_weight", "rank"])?;
        for e in &self.entries {
            w.write_record([
                e.feature.clone(),
                e.importance.to_string(),
                e.signed_weight.map(|v| v.to_string()).unwrap_or_default(),
                e.rank.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Ranks features by the absolute value of their logistic coefficient.
/// Ties are ordered by feature name.
pub fn coefficient_importance(model: &TrainedClassifier) -> Result<Explanation> {
    let Model::LogisticRegression(lr) = &model.model else {
        return Err(Error::Unsupported(format!(
            "coefficient importance needs a logistic regression model, got {}; use permutation importance instead",
            model.kind()
        )));
    };
    let entries = model
        .feature_names
        .iter()
        .zip(&lr.weights)
        .map(|(name, &w)| ImportanceEntry {
            feature: name.clone(),
            importance: w.abs(),
            signed_weight: Some(w),
            rank: 0,
        })
        .collect();
    Ok(Explanation::ranked(ImportanceMethod::Coefficient, entries))
}

fn accuracy(model: &dyn Classifier, x: &FeatureMatrix, threshold: f64) -> Result<f64> {
    let preds = model.predict(x, threshold)?;
    let hits = preds.iter().zip(x.labels()).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / x.n_rows().max(1) as f64)
}

/// Mean drop in accuracy when one column is shuffled, over `repeats`
/// shuffles per feature. Each (feature, repeat) pair has its own stream.
pub fn permutation_importance(
    model: &dyn Classifier,
    x: &FeatureMatrix,
    repeats: usize,
    seed: u64,
) -> Result<Explanation> {
    if repeats == 0 {
        return Err(Error::Config("permutation importance needs at least one repeat".into()));
    }
    x.check_features(model.feature_names())?;
    let threshold = 0.5;
    let baseline = accuracy(model, x, threshold)?;
    let mut entries = Vec::with_capacity(x.n_features());
    for (j, name) in x.feature_names().iter().enumerate() {
        let original = x.column(j);
        let mut total_drop = 0.0;
        for r in 0..repeats {
            let mut rng = rng::stream(seed, &format!("permute-{name}"), r as u64);
            let mut col = original.clone();
            col.shuffle(&mut rng);
            total_drop += baseline - accuracy(model, &x.with_column_replaced(j, &col), threshold)?;
        }
        entries.push(ImportanceEntry {
            feature: name.clone(),
            importance: total_drop / repeats as f64,
            signed_weight: None,
            rank: 0,
        });
    }
    let mut e = Explanation::ranked(ImportanceMethod::Permutation, entries);
    e.repeats = Some(repeats);
    e.seed = Some(seed);
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{LogisticConfig, LogisticModel, ModelKind};
    use proptest::prelude::*;

    fn logistic(names: &[&str], weights: Vec<f64>) -> TrainedClassifier {
        let mut lr = LogisticModel::zeros(weights.len(), LogisticConfig::default());
        lr.weights = weights;
        TrainedClassifier::new(
            Model::LogisticRegression(lr),
            names.iter().map(|s| s.to_string()).collect(),
            0,
        )
    }

    #[test]
    fn ranks_by_absolute_weight() {
        let e = coefficient_importance(&logistic(&["a", "b", "c"], vec![2.0, -3.0, 0.5])).unwrap();
        assert_eq!(e.ranking(), ["b", "a", "c"]);
        assert_eq!(e.entry("b").unwrap().signed_weight, Some(-3.0));
        assert_eq!(e.entry("b").unwrap().importance, 3.0);
        assert_eq!(e.entries.iter().map(|e| e.rank).collect::<Vec<_>>(), [1, 2, 3]);
    }

    #[test]
    fn zero_weights_rank_by_name() {
        let e = coefficient_importance(&logistic(&["z", "m", "a"], vec![0.0; 3])).unwrap();
        assert_eq!(e.ranking(), ["a", "m", "z"]);
        assert!(e.entries.iter().all(|x| x.importance == 0.0));
    }

    #[test]
    fn non_logistic_model_is_rejected() {
        let x = FeatureMatrix::from_rows(
            &[vec![0.0], vec![1.0], vec![0.2], vec![0.9]],
            vec!["a".into()],
            vec![0, 1, 0, 1],
        )
        .unwrap();
        let m = crate::models::train(ModelKind::NaiveBayes, &x, &Default::default(), 0).unwrap();
        let err = coefficient_importance(&m).unwrap_err().to_string();
        assert!(err.contains("permutation"), "{err}");
    }

    fn threshold_fixture() -> (TrainedClassifier, FeatureMatrix) {
        // p = sigmoid(40 * (label_copy - 0.5)); constant column is ignored.
        let n = 40;
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let rows: Vec<Vec<f64>> = labels.iter().enumerate().map(|(i, &y)| vec![f64::from(y), 3.0, (i % 5) as f64]).collect();
        let x = FeatureMatrix::from_rows(&rows, vec!["copy".into(), "constant".into(), "unused".into()], labels).unwrap();
        let mut lr = LogisticModel::zeros(3, LogisticConfig::default());
        lr.weights = vec![40.0, 0.0, 0.0];
        lr.intercept = -20.0;
        let m = TrainedClassifier::new(Model::LogisticRegression(lr), x.feature_names().to_vec(), 0);
        (m, x)
    }

    #[test]
    fn constant_and_unused_columns_score_exactly_zero() {
        let (m, x) = threshold_fixture();
        let e = permutation_importance(&m, &x, 10, 3).unwrap();
        assert_eq!(e.entry("constant").unwrap().importance, 0.0);
        assert_eq!(e.entry("unused").unwrap().importance, 0.0);
        assert_eq!(e.ranking()[0], "copy");
    }

    #[test]
    fn label_copy_importance_matches_shuffle_accuracy() {
        let (m, x) = threshold_fixture();
        let e = permutation_importance(&m, &x, 5, 9).unwrap();
        // Independent recomputation with the same shuffles.
        let mut drops = 0.0;
        for r in 0..5u64 {
            let mut col = x.column(0);
            col.shuffle(&mut rng::stream(9, "permute-copy", r));
            let hits = col.iter().zip(x.labels()).filter(|(v, y)| **v == f64::from(**y)).count();
            drops += 1.0 - hits as f64 / 40.0;
        }
        assert_eq!(e.entry("copy").unwrap().importance, drops / 5.0);
        // Shuffling a balanced label copy lands near chance level.
        assert!((e.entry("copy").unwrap().importance - 0.5).abs() < 0.2);
    }

    #[test]
    fn permutation_is_deterministic_and_mismatch_errors() {
        let (m, x) = threshold_fixture();
        assert_eq!(
            permutation_importance(&m, &x, 4, 1).unwrap(),
            permutation_importance(&m, &x, 4, 1).unwrap()
        );
        let other = FeatureMatrix::from_rows(&[vec![1.0]], vec!["GRE".into()], vec![1]).unwrap();
        assert!(permutation_importance(&m, &other, 4, 1).is_err());
        assert!(permutation_importance(&m, &x, 0, 1).is_err());
    }

    #[test]
    fn json_and_csv_export() {
        let e = coefficient_importance(&logistic(&["a", "b"], vec![1.0, -2.0])).unwrap();
        let back: Explanation = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        assert_eq!(back, e);
        assert_eq!(e.to_csv().unwrap(), "feature,importance,signed_weight,rank\nb,2,-2,1\na,1,1,2\n");
    }

    proptest! {
        #[test]
        fn ranking_invariant_under_positive_scaling(w in prop::collection::vec(-5.0f64..5.0, 1..8), c in 0.01f64..100.0) {
            let names: Vec<String> = (0..w.len()).map(|i| format!("f{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let a = coefficient_importance(&logistic(&refs, w.clone())).unwrap();
            let b = coefficient_importance(&logistic(&refs, w.iter().map(|v| v * c).collect())).unwrap();
            // Scaling can merge near-ties through rounding; compare on distinct magnitudes only.
            let mut mags: Vec<f64> = w.iter().map(|v| v.abs()).collect();
            mags.sort_by(f64::total_cmp);
            prop_assume!(mags.windows(2).all(|p| p[1] - p[0] > 1e-9));
            prop_assert_eq!(a.ranking(), b.ranking());
        }
    }
}
