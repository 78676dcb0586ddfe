//! Personal statements rendered from applicant rows, scored by the offline
//! mock scorer and appended as a feature.

use admitfair::data::clean_anomalies;
use admitfair::llm::{augment_features, score_table, MockScorer, StatementTemplate};
use admitfair::pipeline::stages::{build_features, load_sources, prepare_table};
use admitfair::pipeline::PipelineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut config = PipelineConfig::default();
    config.data.synthetic.rows = 120;
    config.data.synthetic.anomalies = 0;
    let table = load_sources(&config.data, config.seed)?;
    let (prepared, _) = prepare_table(&table, &config)?;
    let (cleaned, _) = clean_anomalies(&prepared, &config.cleaning.rule)?;
    let (_, x) = build_features(&cleaned, &config)?;

    let scorer = MockScorer::fit(&cleaned)?;
    let scored = score_table(&scorer, &cleaned, &StatementTemplate::default(), None, 4)?;
    for s in scored.iter().take(3) {
        println!("[{:.3}] {}", s.score.score, s.statement);
    }
    let scores: Vec<_> = scored.into_iter().map(|s| s.score).collect();
    let augmented = augment_features(&x, &scores)?;
    println!(
        "{} features before, {} after: {}",
        x.n_features(),
        augmented.n_features(),
        augmented.feature_names().join(", ")
    );
    Ok(())
}
