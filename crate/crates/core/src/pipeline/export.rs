//! Writing a finished run to disk.

use std::fs;
use std::path::{Path, PathBuf};

use super::run::{
    PipelineRun, RunBundle, BEFORE_AFTER_FILE, CORRELATION_FILE, FAIRNESS_FILE, IMPORTANCE_FILE, MODEL_ACCURACY_FILE,
    MODEL_FILE, REPORT_FILE, STATEMENTS_FILE,
};
use crate::error::{Error, Result};
use crate::evaluation::write_accuracy_table;
use crate::explain::{Explanation, ImportanceMethod};
use crate::llm;
use crate::models::ModelKind;

/// Published JSON schema for report.json.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

fn csv_string(write: impl FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    write(&mut w)?;
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `model,before_cleaning,after_cleaning`, one row per model kind. Without
/// a cleaning stage only the first accuracy column is filled.
pub fn before_after_csv(bundle: &RunBundle) -> Result<String> {
    csv_string(|w| {
        w.write_record(["model", "before_cleaning", "after_cleaning"])?;
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for kind in ModelKind::ALL {
            let (before, after) = if bundle.cleaning.is_some() {
                (bundle.uncleaned_cv_accuracy(kind), bundle.cv_accuracy(kind))
            } else {
                (bundle.cv_accuracy(kind), None)
            };
            w.write_record([kind.display_name().to_string(), fmt(before), fmt(after)])?;
        }
        Ok(())
    })
}

/// `method,feature,importance,signed_weight,rank` for every explanation.
pub fn importance_csv(explanations: &[Explanation]) -> Result<String> {
    csv_string(|w| {
        w.write_record(["method", "feature", "importance", "signed_weight", "rank"])?;
        for e in explanations {
            let method = match e.method {
                ImportanceMethod::Coefficient => "coefficient",
                ImportanceMethod::Permutation => "permutation",
            };
            for entry in &e.entries {
                w.write_record([
                    method.to_string(),
                    entry.feature.clone(),
                    entry.importance.to_string(),
                    entry.signed_weight.map(|v| v.to_string()).unwrap_or_default(),
                    entry.rank.to_string(),
                ])?;
            }
        }
        Ok(())
    })
}

pub fn model_accuracy_csv(bundle: &RunBundle) -> Result<String> {
    let rows: Vec<(ModelKind, f64)> = ModelKind::ALL
        .iter()
        .filter_map(|&k| bundle.cv_accuracy(k).map(|a| (k, a)))
        .collect();
    let mut buf = Vec::new();
    write_accuracy_table(&rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// File contents of every artifact, in the order they are written.
pub fn render_artifacts(run: &PipelineRun) -> Result<Vec<(&'static str, String)>> {
    let b = &run.bundle;
    let mut files = vec![
        (REPORT_FILE, b.to_json()?),
        (MODEL_FILE, run.model.to_json()?),
        (CORRELATION_FILE, run.correlation.to_csv()?),
        (BEFORE_AFTER_FILE, before_after_csv(b)?),
        (IMPORTANCE_FILE, importance_csv(&b.explanations)?),
        (FAIRNESS_FILE, b.fairness.groups_csv()?),
        (MODEL_ACCURACY_FILE, model_accuracy_csv(b)?),
    ];
    if let Some(s) = &run.statements {
        files.push((STATEMENTS_FILE, llm::statements_csv(s)?));
    }
    Ok(files)
}

/// Writes the bundle into `dir`. On failure, files written by this call
/// are removed again.
pub fn export_report(run: &PipelineRun, dir: &Path) -> Result<Vec<PathBuf>> {
    let files = render_artifacts(run).map_err(|e| e.in_stage("export"))?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).in_stage("export"))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, content) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, content) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(Error::io(&path, e).in_stage("export"));
        }
        written.push(path);
    }
    Ok(written)
}
