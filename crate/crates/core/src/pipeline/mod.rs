//! Configuration, orchestration and export of full runs.

pub mod config;
pub mod export;
pub mod run;
pub mod stages;

pub use config::{
    CleaningConfig, CompositeConfig, DataConfig, ExplainConfig, FairnessConfig, FeatureConfig, PipelineConfig,
    SourceConfig,
};
pub use export::{export_report, render_artifacts, REPORT_SCHEMA};
pub use run::{
    run_pipeline, DeployedAugmentation, DeployedModel, LlmSummary, PipelineRun, RunBundle, SplitSummary,
    REPORT_SCHEMA_VERSION,
};
pub use stages::{build_features, load_sources, prepare_table, read_table, PreparationLog, ROW_ID_COLUMN};
