//! Feature plan, standardization and the correlation matrix of the
//! engineered features.

use admitfair::features::{correlation_matrix, Scaler};
use admitfair::pipeline::stages::{build_features, load_sources, prepare_table};
use admitfair::pipeline::PipelineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = PipelineConfig::default();
    let table = load_sources(&config.data, config.seed)?;
    let (prepared, _) = prepare_table(&table, &config)?;
    let (plan, x) = build_features(&prepared, &config)?;
    println!("features: {}", plan.feature_names().join(", "));

    let scaled = Scaler::fit(&x).apply(&x)?;
    let mean0 = scaled.column(0).iter().sum::<f64>() / scaled.n_rows() as f64;
    println!("standardized {} has mean {mean0:+.2e}", x.feature_names()[0]);

    let mut names = x.feature_names().to_vec();
    let mut columns: Vec<Vec<f64>> = (0..x.n_features()).map(|j| x.column(j)).collect();
    names.push("label".into());
    columns.push(x.labels().iter().map(|&y| f64::from(y)).collect());
    let corr = correlation_matrix(&names, &columns)?;
    let mut with_label: Vec<(&str, f64)> = x
        .feature_names()
        .iter()
        .map(|n| (n.as_str(), corr.get(n, "label").unwrap()))
        .collect();
    with_label.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    for (name, r) in with_label {
        println!("{name:>12}  r = {r:+.3}");
    }
    Ok(())
}
