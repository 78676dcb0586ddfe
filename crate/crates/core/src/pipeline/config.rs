//! Run configuration, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{CleaningRule, SyntheticConfig, PROBABILITY_COLUMN};
use crate::error::{Error, Result};
use crate::evaluation::CvConfig;
use crate::explain::DEFAULT_REPEATS;
use crate::fairness::{SensitiveSpec, DEFAULT_TAU};
use crate::features::{LABEL_COLUMN, PERFORMANCE_COLUMN};
use crate::llm::LlmConfig;
use crate::models::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub path: PathBuf,
    /// Value of the `context` column for rows of this source.
    pub context: String,
    /// Column renames applied right after reading, old name to new name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rename: BTreeMap<String, String>,
}

/// Mean of three score columns replacing those columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositeConfig {
    pub sources: [String; 3],
    pub name: String,
}

impl Default for CompositeConfig {
    fn default() -> Self {
        CompositeConfig {
            sources: ["Math".into(), "Reading".into(), "Writing".into()],
            name: PERFORMANCE_COLUMN.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CSV inputs. When empty, `synthetic` generates the data.
    pub sources: Vec<SourceConfig>,
    pub synthetic: SyntheticConfig,
    pub probability_column: String,
    pub label_column: String,
    pub label_threshold: f64,
    pub missing_threshold: f64,
    pub composite: Option<CompositeConfig>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            sources: Vec::new(),
            synthetic: SyntheticConfig::default(),
            probability_column: PROBABILITY_COLUMN.into(),
            label_column: LABEL_COLUMN.into(),
            label_threshold: 0.5,
            missing_threshold: 0.30,
            composite: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    pub enabled: bool,
    pub rule: CleaningRule,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            enabled: true,
            rule: CleaningRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Columns never used as model inputs.
    pub exclude: Vec<String>,
    /// Protected attributes; their columns are audited, not modelled.
    pub sensitive: Vec<SensitiveSpec>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            exclude: Vec::new(),
            sensitive: vec![
                SensitiveSpec::identity("gender"),
                SensitiveSpec::parental_education("parental_education"),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FairnessConfig {
    pub tau: f64,
    pub threshold: f64,
}

impl Default for FairnessConfig {
    fn default() -> Self {
        FairnessConfig {
            tau: DEFAULT_TAU,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    pub repeats: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            repeats: DEFAULT_REPEATS,
        }
    }
}

/// Everything a run needs. `cv.seed` is ignored; the top-level `seed`
/// drives every random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub cleaning: CleaningConfig,
    pub features: FeatureConfig,
    pub models: ModelConfig,
    pub cv: CvConfig,
    pub fairness: FairnessConfig,
    pub explain: ExplainConfig,
    pub llm: LlmConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            data: DataConfig::default(),
            cleaning: CleaningConfig::default(),
            features: FeatureConfig::default(),
            models: ModelConfig::default(),
            cv: CvConfig::default(),
            fairness: FairnessConfig::default(),
            explain: ExplainConfig::default(),
            llm: LlmConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file. Relative source paths resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for s in &mut cfg.data.sources {
            if s.path.is_relative() {
                s.path = base.join(&s.path);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.data.sources.is_empty() {
            self.data.synthetic.validate()?;
        }
        let mut flags: Vec<&str> = self.data.sources.iter().map(|s| s.context.as_str()).collect();
        flags.sort_unstable();
        if flags.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("source context flags must be distinct".into()));
        }
        if !(0.0..=1.0).contains(&self.data.label_threshold) {
            return Err(Error::Config("label_threshold must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.data.missing_threshold) {
            return Err(Error::Config("missing_threshold must lie in [0, 1]".into()));
        }
        if self.cleaning.enabled {
            self.cleaning.rule.validate()?;
        }
        self.cv.validate()?;
        if !(0.0..=1.0).contains(&self.fairness.tau) {
            return Err(Error::Config("fairness tau must lie in [0, 1]".into()));
        }
        if self.explain.repeats == 0 {
            return Err(Error::Config("explain.repeats must be >= 1".into()));
        }
        Ok(())
    }

    /// Configuration with CV and selection driven by `seed`.
    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            seed: self.seed,
            ..self.cv.clone()
        }
    }
}
