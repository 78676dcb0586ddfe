//! Coefficient ranking of a logistic model next to permutation importance
//! of a random forest.

use admitfair::data::clean_anomalies;
use admitfair::evaluation::stratified_split;
use admitfair::explain::{coefficient_importance, permutation_importance, DEFAULT_REPEATS};
use admitfair::models::{ModelConfig, ModelKind, ScaledModel};
use admitfair::pipeline::stages::{build_features, load_sources, prepare_table};
use admitfair::pipeline::PipelineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();
    let table = load_sources(&config.data, config.seed)?;
    let (prepared, _) = prepare_table(&table, &config)?;
    let (cleaned, _) = clean_anomalies(&prepared, &config.cleaning.rule)?;
    let (_, x) = build_features(&cleaned, &config)?;
    let (train, test) = stratified_split(&x, 0.8, config.seed)?;
    let models = ModelConfig::default();

    let logistic = ScaledModel::fit(ModelKind::LogisticRegression, &train, &models, 1)?;
    let coef = coefficient_importance(&logistic.classifier)?;
    println!("logistic coefficients (standardized inputs):");
    for e in &coef.entries {
        println!("  {}. {:<10} {:+.3}", e.rank, e.feature, e.signed_weight.unwrap_or(0.0));
    }

    let forest = ScaledModel::fit(ModelKind::RandomForest, &train, &models, 1)?;
    let perm = permutation_importance(&forest, &test, DEFAULT_REPEATS, 3)?;
    println!("random forest permutation importance on the test split:");
    for e in &perm.entries {
        println!("  {}. {:<10} {:+.4}", e.rank, e.feature, e.importance);
    }
    Ok(())
}
