//! End-to-end run: load, clean, engineer, (augment), split, cross-validate
//! five models, select, retrain, evaluate, explain and audit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::stages::{self, Augmentation, PreparationLog};
use crate::data::{clean_anomalies, CleaningLog, DataTable};
use crate::error::{Error, Result};
use crate::evaluation::{compute_metrics, kfold_cv, select_best, stratified_split, DatasetTag, EvaluationReport};
use crate::explain::{coefficient_importance, permutation_importance, Explanation};
use crate::fairness::{audit, FairnessReport, SensitiveAttribute};
use crate::features::{correlation_matrix, CorrelationMatrix, FeatureMatrix, FeaturePlan};
use crate::llm::{self, MockScorer, ScoredStatement, StatementTemplate};
use crate::models::{Classifier, ModelKind, ScaledModel, MODEL_FORMAT_VERSION};
use crate::rng;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Mock-scorer state needed to rebuild the `LLM_score` feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeployedAugmentation {
    pub template: StatementTemplate,
    pub scorer: MockScorer,
}

/// Preprocessing recipe plus the selected model, as written to model.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeployedModel {
    pub format_version: u32,
    pub plan: FeaturePlan,
    /// Whether the model reads a trailing `LLM_score` feature.
    pub llm_feature: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<DeployedAugmentation>,
    pub model: ScaledModel,
}

impl DeployedModel {
    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DeployedModel = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!("unsupported model format version {}", m.format_version)));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Applies the stored recipe to a prepared table.
    pub fn features(&self, table: &DataTable) -> Result<FeatureMatrix> {
        let x = self.plan.transform(table)?;
        if !self.llm_feature {
            return Ok(x);
        }
        let aug = self.augmentation.as_ref().ok_or_else(|| {
            Error::Unsupported("model reads a remote-scored LLM feature; score the table before predicting".into())
        })?;
        let scored = llm::score_table(&aug.scorer, table, &aug.template, None, 1)?;
        let scores: Vec<_> = scored.into_iter().map(|s| s.score).collect();
        llm::augment_features(&x, &scores)
    }
}

impl Classifier for DeployedModel {
    fn feature_names(&self) -> &[String] {
        self.model.feature_names()
    }

    fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        self.model.predict_proba(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub train_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmSummary {
    pub scorer: String,
    pub rows_scored: usize,
}

/// Machine-readable summary of a run, written as report.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunBundle {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub preparation: PreparationLog,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cleaning: Option<CleaningLog>,
    pub features: Vec<String>,
    pub split: SplitSummary,
    /// Cross-validation on the training split of the modelled data.
    pub cv_reports: Vec<EvaluationReport>,
    /// The same protocol without the cleaning stage. Empty when cleaning is off.
    pub uncleaned_cv_reports: Vec<EvaluationReport>,
    pub selected_model: ModelKind,
    pub test_report: EvaluationReport,
    pub fairness: FairnessReport,
    pub explanations: Vec<Explanation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm: Option<LlmSummary>,
    /// Files written next to report.json.
    pub artifacts: Vec<String>,
}

impl RunBundle {
    pub fn cv_accuracy(&self, kind: ModelKind) -> Option<f64> {
        self.cv_reports.iter().find(|r| r.model == Some(kind)).map(|r| r.accuracy)
    }

    pub fn uncleaned_cv_accuracy(&self, kind: ModelKind) -> Option<f64> {
        self.uncleaned_cv_reports
            .iter()
            .find(|r| r.model == Some(kind))
            .map(|r| r.accuracy)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A finished run: the bundle plus the in-memory pieces behind the
/// exported files.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub bundle: RunBundle,
    pub model: DeployedModel,
    pub correlation: CorrelationMatrix,
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    pub statements: Option<Vec<ScoredStatement>>,
}

pub const REPORT_FILE: &str = "report.json";
pub const MODEL_FILE: &str = "model.json";
pub const CORRELATION_FILE: &str = "correlation.csv";
pub const BEFORE_AFTER_FILE: &str = "accuracy_before_after.csv";
pub const IMPORTANCE_FILE: &str = "importance.csv";
pub const FAIRNESS_FILE: &str = "fairness_groups.csv";
pub const MODEL_ACCURACY_FILE: &str = "model_accuracy.csv";
pub const STATEMENTS_FILE: &str = "statements.csv";

struct Branch {
    plan: FeaturePlan,
    matrix: FeatureMatrix,
    train: FeatureMatrix,
    test: FeatureMatrix,
    cv: Vec<EvaluationReport>,
    augmentation: Option<Augmentation>,
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

fn run_branch(table: &DataTable, config: &PipelineConfig, tag: DatasetTag) -> Result<Branch> {
    let (plan, matrix) = staged("features", stages::build_features(table, config))?;
    let augmentation = if config.llm.enabled {
        Some(staged("augment", stages::augment(table, &matrix, &config.llm))?)
    } else {
        None
    };
    let matrix = augmentation.as_ref().map_or(matrix, |a| a.matrix.clone());
    let (train, test) = staged("split", stratified_split(&matrix, config.cv.train_fraction, config.seed))?;
    let cv_config = config.cv_config();
    let mut cv = Vec::with_capacity(ModelKind::ALL.len());
    for kind in ModelKind::ALL {
        log::info!("cross-validating {kind} on {tag:?} data");
        let mut report = staged("cross_validate", kfold_cv(&train, kind, &config.models, &cv_config))?.report;
        report.dataset = Some(tag);
        for f in &mut report.per_fold {
            f.dataset = Some(tag);
        }
        cv.push(report);
    }
    Ok(Branch {
        plan,
        matrix,
        train,
        test,
        cv,
        augmentation,
    })
}

fn correlation_of(x: &FeatureMatrix, label: &str) -> Result<CorrelationMatrix> {
    let mut names = x.feature_names().to_vec();
    let mut columns: Vec<Vec<f64>> = (0..x.n_features()).map(|j| x.column(j)).collect();
    names.push(label.to_string());
    columns.push(x.labels().iter().map(|&y| f64::from(y)).collect());
    correlation_matrix(&names, &columns)
}

/// Runs every stage. Errors carry the name of the failing stage.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineRun> {
    staged("config", config.validate())?;
    let seed = config.seed;
    let loaded = staged("load", stages::load_sources(&config.data, seed))?;
    let (prepared, preparation) = staged("prepare", stages::prepare_table(&loaded, config))?;

    let (main_table, cleaning) = if config.cleaning.enabled {
        let (t, log) = staged("clean", clean_anomalies(&prepared, &config.cleaning.rule))?;
        log::info!("cleaning removed {} of {} rows", log.removed_row_ids.len(), log.rows_before);
        (t, Some(log))
    } else {
        (prepared.clone(), None)
    };
    let main_tag = if cleaning.is_some() { DatasetTag::Cleaned } else { DatasetTag::Raw };
    let main = run_branch(&main_table, config, main_tag)?;
    let uncleaned_cv_reports = if cleaning.is_some() {
        run_branch(&prepared, config, DatasetTag::Raw)?.cv
    } else {
        Vec::new()
    };

    let scores: Vec<(ModelKind, f64)> = main
        .cv
        .iter()
        .map(|r| (r.model.expect("cv reports carry their model"), r.accuracy))
        .collect();
    let selected = staged(
        "select",
        select_best(&scores).ok_or_else(|| Error::Training("no model was evaluated".into())),
    )?;
    log::info!("selected {selected}");

    let final_seed = rng::derive_seed(seed, "final", 0);
    let fitted = staged("train", ScaledModel::fit(selected, &main.train, &config.models, final_seed))?;
    let threshold = config.fairness.threshold;
    let test_scores = staged("evaluate", fitted.predict_proba(&main.test))?;
    let test_preds: Vec<u8> = test_scores.iter().map(|&p| u8::from(p >= threshold)).collect();
    let mut test_report = staged("evaluate", compute_metrics(main.test.labels(), &test_preds, Some(&test_scores)))?;
    test_report.model = Some(selected);
    test_report.dataset = Some(main_tag);

    let explanations = staged("explain", {
        let logistic = if selected == ModelKind::LogisticRegression {
            fitted.clone()
        } else {
            ScaledModel::fit(ModelKind::LogisticRegression, &main.train, &config.models, final_seed)?
        };
        let coef = coefficient_importance(&logistic.classifier)?;
        let perm = permutation_importance(
            &fitted,
            &main.test,
            config.explain.repeats,
            rng::derive_seed(seed, "permutation", 0),
        )?;
        Ok(vec![coef, perm])
    })?;

    let fairness = staged("audit", {
        let attrs: Vec<SensitiveAttribute> = main
            .test
            .sensitive()
            .iter()
            .map(|(name, groups)| SensitiveAttribute::from_assignment(name, groups.clone()))
            .collect();
        audit(&test_preds, main.test.labels(), &attrs, config.fairness.tau)
    })?;

    let correlation = staged("correlation", correlation_of(&main.matrix, &config.data.label_column))?;

    let llm_summary = main.augmentation.as_ref().map(|a| LlmSummary {
        scorer: a.scorer_id.clone(),
        rows_scored: a.statements.len(),
    });
    let mut artifacts: Vec<String> = [
        REPORT_FILE,
        MODEL_FILE,
        CORRELATION_FILE,
        BEFORE_AFTER_FILE,
        IMPORTANCE_FILE,
        FAIRNESS_FILE,
        MODEL_ACCURACY_FILE,
    ]
    .map(String::from)
    .to_vec();
    if main.augmentation.is_some() {
        artifacts.push(STATEMENTS_FILE.to_string());
    }

    let model = DeployedModel {
        format_version: MODEL_FORMAT_VERSION,
        plan: main.plan,
        llm_feature: main.augmentation.is_some(),
        augmentation: main.augmentation.as_ref().and_then(|a| {
            a.mock.clone().map(|scorer| DeployedAugmentation {
                template: config.llm.template.clone(),
                scorer,
            })
        }),
        model: fitted,
    };
    let bundle = RunBundle {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config: config.clone(),
        preparation,
        cleaning,
        features: main.matrix.feature_names().to_vec(),
        split: SplitSummary {
            train_rows: main.train.n_rows(),
            test_rows: main.test.n_rows(),
        },
        cv_reports: main.cv,
        uncleaned_cv_reports,
        selected_model: selected,
        test_report,
        fairness,
        explanations,
        llm: llm_summary,
        artifacts,
    };
    Ok(PipelineRun {
        bundle,
        model,
        correlation,
        train: main.train,
        test: main.test,
        statements: main.augmentation.map(|a| a.statements),
    })
}
