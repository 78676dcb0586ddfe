//! The stacked ensemble: out-of-fold base probabilities feed a logistic
//! meta model.

use admitfair::data::clean_anomalies;
use admitfair::evaluation::{compute_metrics, stratified_split};
use admitfair::features::Scaler;
use admitfair::models::stacked::{StackedModel, META_FEATURES};
use admitfair::models::ModelConfig;
use admitfair::pipeline::stages::{build_features, load_sources, prepare_table};
use admitfair::pipeline::PipelineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();
    let table = load_sources(&config.data, config.seed)?;
    let (prepared, _) = prepare_table(&table, &config)?;
    let (cleaned, _) = clean_anomalies(&prepared, &config.cleaning.rule)?;
    let (_, x) = build_features(&cleaned, &config)?;
    let (train, test) = stratified_split(&x, 0.8, config.seed)?;
    let scaler = Scaler::fit(&train);
    let (train, test) = (scaler.apply(&train)?, scaler.apply(&test)?);

    let stack = StackedModel::fit(&train, &ModelConfig::default(), 11)?;
    println!("meta weights:");
    for (name, w) in META_FEATURES.iter().zip(&stack.meta.weights) {
        println!("  {name:<18} {w:+.3}");
    }
    println!("  intercept          {:+.3}", stack.meta.intercept);

    let probs: Vec<f64> = test.rows().map(|r| stack.probability(r)).collect();
    let preds: Vec<u8> = probs.iter().map(|&p| u8::from(p >= 0.5)).collect();
    let report = compute_metrics(test.labels(), &preds, Some(&probs))?;
    println!(
        "test accuracy {:.3}, auroc {}",
        report.accuracy,
        report.auroc.map_or("-".into(), |a| format!("{a:.3}"))
    );
    Ok(())
}
