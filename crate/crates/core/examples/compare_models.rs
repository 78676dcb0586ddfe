//! Ten-fold cross-validation of all five classifiers and model selection.

use admitfair::data::clean_anomalies;
use admitfair::evaluation::{kfold_cv, select_best, stratified_split};
use admitfair::models::{ModelConfig, ModelKind};
use admitfair::pipeline::stages::{build_features, load_sources, prepare_table};
use admitfair::pipeline::PipelineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();
    let table = load_sources(&config.data, config.seed)?;
    let (prepared, _) = prepare_table(&table, &config)?;
    let (cleaned, _) = clean_anomalies(&prepared, &config.cleaning.rule)?;
    let (_, x) = build_features(&cleaned, &config)?;
    let (train, _) = stratified_split(&x, 0.8, config.seed)?;

    let mut scores = Vec::new();
    println!("{:<20} {:>8} {:>8} {:>8}", "model", "acc", "f1", "auroc");
    for kind in ModelKind::ALL {
        let r = kfold_cv(&train, kind, &ModelConfig::default(), &config.cv_config())?.report;
        println!(
            "{:<20} {:>8.3} {:>8.3} {:>8}",
            kind.display_name(),
            r.accuracy,
            r.f1,
            r.auroc.map_or("-".into(), |a| format!("{a:.3}"))
        );
        scores.push((kind, r.accuracy));
    }
    if let Some(best) = select_best(&scores) {
        println!("selected: {}", best.display_name());
    }
    Ok(())
}
