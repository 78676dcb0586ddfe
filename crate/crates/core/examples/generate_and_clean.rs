//! Synthetic admissions data, label binarization and anomaly cleaning.
//!
//! ```text
//! cargo run --example generate_and_clean -- [seed]
//! ```

use admitfair::data::{clean_anomalies, generate_synthetic, CleaningRule, SyntheticConfig, PROBABILITY_COLUMN};
use admitfair::features::{add_binary_label, LABEL_COLUMN};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let raw = generate_synthetic(&SyntheticConfig::default(), seed)?;
    let labeled = add_binary_label(&raw, PROBABILITY_COLUMN, LABEL_COLUMN, 0.5)?;
    let admitted = labeled
        .numeric_column(LABEL_COLUMN)?
        .iter()
        .filter(|v| **v == Some(1.0))
        .count();
    println!("{} rows, {admitted} admitted", labeled.n_rows());

    let (cleaned, log) = clean_anomalies(&labeled, &CleaningRule::default())?;
    println!("cleaning kept {} of {} rows", cleaned.n_rows(), log.rows_before);
    for (rule, hits) in &log.rule_hits {
        println!("  {rule}: {hits}");
    }
    let shown: Vec<String> = log.removed_row_ids.iter().take(8).map(u64::to_string).collect();
    println!("first removed ids: {}", shown.join(" "));
    Ok(())
}
