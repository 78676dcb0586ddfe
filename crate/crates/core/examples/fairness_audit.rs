//! Demographic parity and equalized odds of a logistic model, by gender
//! and by parental education.

use admitfair::data::clean_anomalies;
use admitfair::evaluation::stratified_split;
use admitfair::fairness::{audit, SensitiveAttribute, DEFAULT_TAU};
use admitfair::models::{Classifier, ModelConfig, ModelKind, ScaledModel};
use admitfair::pipeline::stages::{build_features, load_sources, prepare_table};
use admitfair::pipeline::PipelineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();
    let table = load_sources(&config.data, config.seed)?;
    let (prepared, _) = prepare_table(&table, &config)?;
    let (cleaned, _) = clean_anomalies(&prepared, &config.cleaning.rule)?;
    let (_, x) = build_features(&cleaned, &config)?;
    let (train, test) = stratified_split(&x, 0.8, config.seed)?;
    let model = ScaledModel::fit(ModelKind::LogisticRegression, &train, &ModelConfig::default(), 1)?;
    let preds = model.predict(&test, 0.5)?;

    let attrs: Vec<SensitiveAttribute> = test
        .sensitive()
        .iter()
        .map(|(name, groups)| SensitiveAttribute::from_assignment(name, groups.clone()))
        .collect();
    let report = audit(&preds, test.labels(), &attrs, DEFAULT_TAU)?;
    for a in &report.attributes {
        let flag = if a.flagged { "  <- exceeds tau" } else { "" };
        println!("{}: dp gap {:.3}, eo gap {:.3}{flag}", a.attribute, a.dp_gap, a.eo_gap);
        for g in &a.groups {
            println!(
                "  {:<10} n={:<4} base {:.2}  predicted {:.2}",
                g.label, g.support, g.base_rate, g.positive_rate
            );
        }
    }
    Ok(())
}
