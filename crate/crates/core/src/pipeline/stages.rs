//! Individual steps shared by the full run and the CLI subcommands.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{DataConfig, PipelineConfig};
use crate::data::{
    drop_high_missingness, generate_synthetic, impute, merge_outer, read_csv, Cell, DataTable, ParseOptions,
    CONTEXT_COLUMN,
};
use crate::error::{Error, Result};
use crate::features::{add_binary_label, add_composite, FeatureMatrix, FeaturePlan};
use crate::llm::{self, LlmConfig, MockScorer, ScoredStatement};

/// Id column written next to every exported table.
pub const ROW_ID_COLUMN: &str = "row_id";

/// Reads a CSV, taking row ids from a `row_id` column when there is one.
pub fn read_table(path: &Path) -> Result<DataTable> {
    let plain = read_csv(path, &ParseOptions::default())?;
    if plain.column_index(ROW_ID_COLUMN).is_some() {
        read_csv(path, &ParseOptions::default().with_id_column(ROW_ID_COLUMN))
    } else {
        Ok(plain)
    }
}

/// Reads and merges the configured sources, or generates synthetic rows.
pub fn load_sources(data: &DataConfig, seed: u64) -> Result<DataTable> {
    if data.sources.is_empty() {
        let table = generate_synthetic(&data.synthetic, seed)?;
        return merge_outer(&[(table, "synthetic")]);
    }
    let mut tables = Vec::with_capacity(data.sources.len());
    for s in &data.sources {
        let mut table = read_table(&s.path)?;
        for (from, to) in &s.rename {
            table.rename_column(from, to)?;
        }
        tables.push((table, s.context.as_str()));
    }
    merge_outer(&tables)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationLog {
    pub rows_in: usize,
    /// Rows without a label or admit probability, removed before imputation.
    pub unlabeled_rows: Vec<u64>,
    pub dropped_columns: Vec<String>,
    pub rows_out: usize,
}

/// Label binarization, the optional composite score, missingness
/// filtering and imputation.
pub fn prepare_table(table: &DataTable, config: &PipelineConfig) -> Result<(DataTable, PreparationLog)> {
    let data = &config.data;
    let label_source = if table.column_index(&data.label_column).is_some() {
        data.label_column.as_str()
    } else if table.column_index(&data.probability_column).is_some() {
        data.probability_column.as_str()
    } else {
        return Err(Error::MissingColumn(format!(
            "{} (or {})",
            data.label_column, data.probability_column
        )));
    };
    let j = table.require_column(label_source)?;
    let unlabeled_rows: Vec<u64> = table
        .rows()
        .iter()
        .zip(table.row_ids())
        .filter(|(r, _)| r[j].is_missing())
        .map(|(_, id)| *id)
        .collect();
    let labeled = table.filter_rows(|_, r| !r[j].is_missing());
    if labeled.n_rows() == 0 {
        return Err(Error::Empty("no labeled rows".into()));
    }
    let labeled = if label_source == data.probability_column {
        add_binary_label(&labeled, &data.probability_column, &data.label_column, data.label_threshold)?
    } else {
        labeled
    };

    let labeled = match &data.composite {
        Some(c) => add_composite(&labeled, &c.sources, &c.name)?,
        None => labeled,
    };

    let mut exempt = vec![data.label_column.clone()];
    exempt.extend(config.features.sensitive.iter().map(|s| s.column.clone()));
    let (kept, dropped_columns) = drop_high_missingness(&labeled, data.missing_threshold, &exempt);
    let out = impute(&kept)?;
    let log = PreparationLog {
        rows_in: table.n_rows(),
        unlabeled_rows,
        dropped_columns,
        rows_out: out.n_rows(),
    };
    Ok((out, log))
}

/// Configured exclusions plus a `context` column with a single value.
pub fn feature_exclusions(table: &DataTable, config: &PipelineConfig) -> Vec<String> {
    let mut out = config.features.exclude.clone();
    if let Some(j) = table.column_index(CONTEXT_COLUMN) {
        let mut values = table.column_cells(j).filter_map(Cell::as_category);
        let first = values.next();
        if values.all(|v| Some(v) == first) && !out.iter().any(|c| c == CONTEXT_COLUMN) {
            out.push(CONTEXT_COLUMN.to_string());
        }
    }
    out
}

pub fn build_features(table: &DataTable, config: &PipelineConfig) -> Result<(FeaturePlan, FeatureMatrix)> {
    let exclude = feature_exclusions(table, config);
    let plan = FeaturePlan::fit(table, &config.data.label_column, &config.features.sensitive, &exclude)?;
    let matrix = plan.transform(table)?;
    Ok((plan, matrix))
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    pub matrix: FeatureMatrix,
    pub statements: Vec<ScoredStatement>,
    /// Present for the mock scorer, whose statistics make the deployed
    /// model self-contained.
    pub mock: Option<MockScorer>,
    pub scorer_id: String,
}

/// Scores every row of `table` and appends the scores to `matrix`.
pub fn augment(table: &DataTable, matrix: &FeatureMatrix, config: &LlmConfig) -> Result<Augmentation> {
    let scorer = config.build_scorer(table)?;
    let cache = config.open_cache()?;
    let statements = llm::score_table(scorer.as_ref(), table, &config.template, cache.as_ref(), config.max_concurrency)?;
    let scores: Vec<_> = statements.iter().map(|s| s.score.clone()).collect();
    let matrix = llm::augment_features(matrix, &scores)?;
    let mock = match config.scorer {
        llm::ScorerKind::Mock => Some(MockScorer::fit(table)?),
        llm::ScorerKind::Remote => None,
    };
    Ok(Augmentation {
        matrix,
        statements,
        mock,
        scorer_id: scorer.id().to_string(),
    })
}
