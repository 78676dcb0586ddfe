use admitfair::data::{
    clean_anomalies, drop_high_missingness, generate_synthetic, impute, merge_outer, parse_csv, Cell, CleaningRule,
    ParseOptions, SyntheticConfig, PROBABILITY_COLUMN,
};
use admitfair::features::{add_binary_label, LABEL_COLUMN};

fn base_rates(table: &admitfair::data::DataTable, column: &str, high: &[&str]) -> (f64, f64) {
    let groups = table.categorical_column(column).unwrap();
    let probs = table.numeric_column(PROBABILITY_COLUMN).unwrap();
    let (mut a, mut na, mut b, mut nb) = (0.0, 0.0, 0.0, 0.0);
    for (g, p) in groups.iter().zip(&probs) {
        let admitted = f64::from(u8::from(p.unwrap() >= 0.5));
        if high.contains(&g.as_deref().unwrap()) {
            a += admitted;
            na += 1.0;
        } else {
            b += admitted;
            nb += 1.0;
        }
    }
    (a / na, b / nb)
}

#[test]
fn unbiased_generator_has_matching_group_base_rates() {
    let config = SyntheticConfig {
        rows: 10_000,
        anomalies: 0,
        ..SyntheticConfig::default()
    }
    .unbiased();
    let t = generate_synthetic(&config, 3).unwrap();
    let (f, m) = base_rates(&t, "gender", &["female"]);
    assert!((f - m).abs() < 0.03, "gender base rates {f} vs {m}");
    let (hi, lo) = base_rates(&t, "parental_education", &["bachelor's degree", "master's degree"]);
    assert!((hi - lo).abs() < 0.03, "parental base rates {hi} vs {lo}");

    let biased = generate_synthetic(&SyntheticConfig { rows: 10_000, ..Default::default() }, 3).unwrap();
    let (hi, lo) = base_rates(&biased, "parental_education", &["bachelor's degree", "master's degree"]);
    assert!(hi - lo > 0.03, "default generator should separate groups: {hi} vs {lo}");
}

#[test]
fn injected_anomalies_are_exactly_what_cleaning_removes() {
    for anomalies in [0, 39, 120] {
        let config = SyntheticConfig {
            anomalies,
            ..SyntheticConfig::default()
        };
        let t = generate_synthetic(&config, 21).unwrap();
        let labeled = add_binary_label(&t, PROBABILITY_COLUMN, LABEL_COLUMN, 0.5).unwrap();
        let (cleaned, log) = clean_anomalies(&labeled, &CleaningRule::default()).unwrap();
        assert_eq!(log.removed_row_ids.len(), anomalies);
        assert_eq!(cleaned.n_rows(), 400 - anomalies);
    }
}

#[test]
fn heterogeneous_sources_merge_filter_and_impute() {
    let grad = parse_csv(
        "GRE,CGPA,Chance_of_Admit,gender\n320,9.1,0.8,female\n300,,0.4,male\n310,8.5,0.6,\n".as_bytes(),
        &ParseOptions::default(),
    )
    .unwrap();
    let school = parse_csv(
        "Math,Chance_of_Admit,gender\n70,0.7,male\n55,0.3,female\n".as_bytes(),
        &ParseOptions::default(),
    )
    .unwrap();
    let merged = merge_outer(&[(grad, "graduate"), (school, "school")]).unwrap();
    assert_eq!(merged.n_rows(), 5);
    let context = merged.categorical_column("context").unwrap();
    assert_eq!(context.iter().filter(|c| c.as_deref() == Some("school")).count(), 2);
    let ids = merged.row_ids().to_vec();
    let mut unique = ids.clone();
    unique.dedup();
    assert_eq!(unique.len(), ids.len());

    let (kept, dropped) = drop_high_missingness(&merged, 0.30, &["gender".to_string()]);
    assert_eq!(dropped, ["GRE", "CGPA", "Math"]);
    let filled = impute(&kept).unwrap();
    let gender = filled.column_index("gender").unwrap();
    assert!(filled.column_cells(gender).all(|c| !matches!(c, Cell::Missing)));
}
