//! Pseudo personal statements and their "admission likelihood" scores.
//!
//! A statement is rendered from a row through a [`StatementTemplate`], then
//! scored by a [`Scorer`]. [`MockScorer`] is a closed-form stand-in that
//! needs no network; [`RemoteScorer`] posts to an HTTP endpoint. Scores can
//! be cached on disk by scorer id and statement hash.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{Cell, DataTable};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::models::sigmoid;

pub const SCORE_COLUMN: &str = "LLM_score";
pub const MOCK_SCORER_ID: &str = "mock-v1";
pub const TOKEN_ENV: &str = "ADMITFAIR_SCORER_TOKEN";
pub const ENDPOINT_ENV: &str = "ADMITFAIR_SCORER_URL";

pub const DEFAULT_TEMPLATE: &str = "I earned a GRE score of {GRE} and a TOEFL score of {TOEFL}, \
with a cumulative GPA of {CGPA}. My statement of purpose is rated {SOP} and my recommendations {LOR}. \
Research experience: {Research}.";

pub const DEFAULT_RUBRIC: &str = "Rate the applicant's admission likelihood as a number between 0 and 1. \
Reply with JSON {\"score\": <number>}.";

/// Template text with `{COLUMN}` placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct StatementTemplate {
    text: String,
    required: Vec<String>,
}

enum Piece<'a> {
    Text(&'a str),
    Field(&'a str),
}

fn pieces(text: &str) -> Result<Vec<Piece<'_>>> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push(Piece::Text(&rest[..open]));
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| Error::Config(format!("unclosed placeholder in template `{text}`")))?;
        let name = &after[..close];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Config(format!("bad placeholder `{{{name}}}` in template")));
        }
        out.push(Piece::Field(name));
        rest = &after[close + 1..];
    }
    out.push(Piece::Text(rest));
    Ok(out)
}

impl StatementTemplate {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        let mut required: Vec<String> = Vec::new();
        for p in pieces(&text)? {
            if let Piece::Field(name) = p {
                if !required.iter().any(|r| r == name) {
                    required.push(name.to_string());
                }
            }
        }
        Ok(StatementTemplate { text, required })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn required_fields(&self) -> &[String] {
        &self.required
    }

    /// Checks that every placeholder names a column of `table`.
    pub fn validate(&self, table: &DataTable) -> Result<()> {
        match self.required.iter().find(|f| table.column_index(f).is_none()) {
            Some(f) => Err(Error::MissingField(f.clone())),
            None => Ok(()),
        }
    }
}

impl Default for StatementTemplate {
    fn default() -> Self {
        StatementTemplate::new(DEFAULT_TEMPLATE).expect("default template parses")
    }
}

impl TryFrom<String> for StatementTemplate {
    type Error = Error;

    fn try_from(text: String) -> Result<Self> {
        StatementTemplate::new(text)
    }
}

impl From<StatementTemplate> for String {
    fn from(t: StatementTemplate) -> String {
        t.text
    }
}

/// Substitutes row `row` of `table` into the template. Numbers are printed
/// with one decimal.
pub fn render_statement(table: &DataTable, row: usize, template: &StatementTemplate) -> Result<String> {
    let mut out = String::with_capacity(template.text.len() + 32);
    for p in pieces(&template.text)? {
        match p {
            Piece::Text(t) => out.push_str(t),
            Piece::Field(name) => {
                let j = table.column_index(name).ok_or_else(|| Error::MissingField(name.to_string()))?;
                match &table.row(row)[j] {
                    Cell::Number(v) => out.push_str(&format!("{v:.1}")),
                    Cell::Category(s) => out.push_str(s),
                    Cell::Missing => return Err(Error::MissingField(name.to_string())),
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmScore {
    pub row_id: u64,
    pub score: f64,
    pub scorer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreResponse {
    pub score: f64,
    pub raw_response: Option<String>,
}

pub trait Scorer: Sync {
    fn id(&self) -> &str;

    /// Scores one statement. `table` and `row` give the structured values
    /// the statement was rendered from.
    fn score(&self, statement: &str, table: &DataTable, row: usize) -> Result<ScoreResponse>;
}

/// `sigmoid(1.5 z_GRE + 1.5 z_TOEFL + 2.0 z_CGPA + 0.5 Research)`.
pub fn mock_score(z_gre: f64, z_toefl: f64, z_cgpa: f64, research: f64) -> f64 {
    sigmoid(1.5 * z_gre + 1.5 * z_toefl + 2.0 * z_cgpa + 0.5 * research)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub stddev: f64,
}

impl ColumnStats {
    fn of(table: &DataTable, column: &str) -> Result<Self> {
        let values: Vec<f64> = table.numeric_column(column)?.into_iter().flatten().collect();
        if values.is_empty() {
            return Err(Error::AllMissing(column.to_string()));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stddev = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        Ok(ColumnStats { mean, stddev })
    }

    pub fn z(&self, v: f64) -> f64 {
        if self.stddev == 0.0 {
            0.0
        } else {
            (v - self.mean) / self.stddev
        }
    }
}

/// Deterministic scorer over standardized GRE, TOEFL and CGPA plus the
/// Research flag. Population statistics come from the table it is fit on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockScorer {
    pub gre: ColumnStats,
    pub toefl: ColumnStats,
    pub cgpa: ColumnStats,
}

impl MockScorer {
    pub fn fit(table: &DataTable) -> Result<Self> {
        Ok(MockScorer {
            gre: ColumnStats::of(table, "GRE")?,
            toefl: ColumnStats::of(table, "TOEFL")?,
            cgpa: ColumnStats::of(table, "CGPA")?,
        })
    }
}

fn field(table: &DataTable, row: usize, name: &str) -> Result<f64> {
    let j = table.column_index(name).ok_or_else(|| Error::MissingField(name.to_string()))?;
    table.row(row)[j]
        .as_number()
        .ok_or_else(|| Error::MissingField(name.to_string()))
}

impl Scorer for MockScorer {
    fn id(&self) -> &str {
        MOCK_SCORER_ID
    }

    fn score(&self, _statement: &str, table: &DataTable, row: usize) -> Result<ScoreResponse> {
        let s = mock_score(
            self.gre.z(field(table, row, "GRE")?),
            self.toefl.z(field(table, row, "TOEFL")?),
            self.cgpa.z(field(table, row, "CGPA")?),
            field(table, row, "Research")?,
        );
        Ok(ScoreResponse {
            score: s,
            raw_response: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub rubric: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    /// Environment variable holding a bearer token.
    pub token_env: String,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: String::new(),
            rubric: DEFAULT_RUBRIC.to_string(),
            timeout_secs: 30,
            max_retries: 3,
            backoff_ms: 250,
            token_env: TOKEN_ENV.to_string(),
        }
    }
}

/// Posts `{statement, rubric}` as JSON and reads a top-level numeric
/// `score` from the reply.
pub struct RemoteScorer {
    id: String,
    config: RemoteConfig,
    token: Option<String>,
    agent: ureq::Agent,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    statement: &'a str,
    rubric: &'a str,
}

enum Attempt {
    Retry(String, Option<String>),
    Fatal(String, Option<String>),
}

impl RemoteScorer {
    /// Builds a scorer; an empty endpoint falls back to the
    /// `ADMITFAIR_SCORER_URL` environment variable.
    pub fn new(mut config: RemoteConfig) -> Result<Self> {
        if config.endpoint.is_empty() {
            config.endpoint = std::env::var(ENDPOINT_ENV).unwrap_or_default();
        }
        if config.endpoint.is_empty() {
            return Err(Error::Config(format!(
                "remote scorer needs an endpoint (config or {ENDPOINT_ENV})"
            )));
        }
        let token = std::env::var(&config.token_env).ok().filter(|t| !t.is_empty());
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteScorer {
            id: format!("remote:{}", config.endpoint),
            config,
            token,
            agent,
        })
    }

    fn attempt(&self, statement: &str) -> std::result::Result<ScoreResponse, Attempt> {
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(t) = &self.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let body = ScoreRequest {
            statement,
            rubric: &self.config.rubric,
        };
        let mut resp = req.send_json(&body).map_err(|e| Attempt::Retry(e.to_string(), None))?;
        let status = resp.status().as_u16();
        let raw = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Retry(e.to_string(), None))?;
        if status == 429 || status >= 500 {
            return Err(Attempt::Retry(format!("HTTP {status}"), Some(raw)));
        }
        if status >= 400 {
            return Err(Attempt::Fatal(format!("HTTP {status}"), Some(raw)));
        }
        let score = serde_json::from_str::<serde_json::Value>(&raw)
            .ok()
            .and_then(|v| v.get("score").and_then(serde_json::Value::as_f64));
        match score {
            Some(s) if s.is_finite() => {
                if !(0.0..=1.0).contains(&s) {
                    log::warn!("{}: score {s} outside [0, 1], clamped", self.id);
                }
                Ok(ScoreResponse {
                    score: s.clamp(0.0, 1.0),
                    raw_response: Some(raw),
                })
            }
            _ => Err(Attempt::Retry("response lacks a numeric `score`".into(), Some(raw))),
        }
    }
}

impl Scorer for RemoteScorer {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, statement: &str, _table: &DataTable, _row: usize) -> Result<ScoreResponse> {
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut attempt = 0;
        loop {
            match self.attempt(statement) {
                Ok(r) => return Ok(r),
                Err(Attempt::Fatal(message, raw)) => {
                    return Err(Error::Scorer {
                        scorer: self.id.clone(),
                        message,
                        raw_response: raw,
                    })
                }
                Err(Attempt::Retry(message, raw)) => {
                    if attempt >= self.config.max_retries {
                        return Err(Error::Scorer {
                            scorer: self.id.clone(),
                            message: format!("{message} (after {} attempts)", attempt + 1),
                            raw_response: raw,
                        });
                    }
                    log::debug!("{}: attempt {} failed: {message}", self.id, attempt + 1);
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

/// Directory of JSON score records keyed by scorer id and statement hash.
#[derive(Debug, Clone)]
pub struct ScoreCache {
    dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CacheRecord {
    scorer: String,
    statement: String,
    score: f64,
    #[serde(default)]
    raw_response: Option<String>,
}

static TMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

impl ScoreCache {
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(ScoreCache { dir: dir.to_path_buf() })
    }

    pub fn key(scorer: &str, statement: &str) -> String {
        let mut h = Sha256::new();
        h.update(scorer.as_bytes());
        h.update([0u8]);
        h.update(statement.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, scorer: &str, statement: &str) -> PathBuf {
        self.dir.join(format!("{}.json", Self::key(scorer, statement)))
    }

    pub fn get(&self, scorer: &str, statement: &str) -> Option<ScoreResponse> {
        let text = fs::read_to_string(self.path(scorer, statement)).ok()?;
        let rec: CacheRecord = serde_json::from_str(&text).ok()?;
        (rec.scorer == scorer && rec.statement == statement).then_some(ScoreResponse {
            score: rec.score,
            raw_response: rec.raw_response,
        })
    }

    /// Writes through a temporary file and a rename, so readers never see
    /// a partial record.
    pub fn put(&self, scorer: &str, statement: &str, response: &ScoreResponse) -> Result<()> {
        let rec = CacheRecord {
            scorer: scorer.to_string(),
            statement: statement.to_string(),
            score: response.score,
            raw_response: response.raw_response.clone(),
        };
        let target = self.path(scorer, statement);
        let tmp = self.dir.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::write(&tmp, serde_json::to_vec(&rec)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredStatement {
    pub statement: String,
    pub score: LlmScore,
}

/// Renders and scores one row, going through the cache when given.
pub fn score_statement(
    scorer: &dyn Scorer,
    table: &DataTable,
    row: usize,
    template: &StatementTemplate,
    cache: Option<&ScoreCache>,
) -> Result<ScoredStatement> {
    let statement = render_statement(table, row, template)?;
    let cached = cache.and_then(|c| c.get(scorer.id(), &statement));
    let response = match cached {
        Some(r) => r,
        None => {
            let r = scorer.score(&statement, table, row)?;
            if let Some(c) = cache {
                c.put(scorer.id(), &statement, &r)?;
            }
            r
        }
    };
    if !(0.0..=1.0).contains(&response.score) {
        return Err(Error::Scorer {
            scorer: scorer.id().to_string(),
            message: format!("score {} outside [0, 1]", response.score),
            raw_response: response.raw_response,
        });
    }
    Ok(ScoredStatement {
        statement,
        score: LlmScore {
            row_id: table.row_ids()[row],
            score: response.score,
            scorer: scorer.id().to_string(),
            raw_response: response.raw_response,
        },
    })
}

/// Scores every row with at most `concurrency` requests in flight.
/// Output is in row order.
pub fn score_table(
    scorer: &dyn Scorer,
    table: &DataTable,
    template: &StatementTemplate,
    cache: Option<&ScoreCache>,
    concurrency: usize,
) -> Result<Vec<ScoredStatement>> {
    template.validate(table)?;
    let n = table.n_rows();
    let workers = concurrency.clamp(1, n.max(1));
    if workers == 1 {
        return (0..n).map(|i| score_statement(scorer, table, i, template, cache)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<ScoredStatement>>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let r = score_statement(scorer, table, i, template, cache);
                slots.lock().expect("score slots poisoned")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("score slots poisoned")
        .into_iter()
        .map(|r| r.expect("every row scored"))
        .collect()
}

/// Appends the scores as a trailing `LLM_score` column.
pub fn augment_features(matrix: &FeatureMatrix, scores: &[LlmScore]) -> Result<FeatureMatrix> {
    if scores.len() != matrix.n_rows() {
        return Err(Error::Shape(format!(
            "{} scores for {} rows",
            scores.len(),
            matrix.n_rows()
        )));
    }
    if let Some((s, id)) = scores.iter().zip(matrix.row_ids()).find(|(s, id)| s.row_id != **id) {
        return Err(Error::Shape(format!("score for row {} aligned with row {id}", s.row_id)));
    }
    let column: Vec<f64> = scores.iter().map(|s| s.score).collect();
    matrix.with_appended_column(SCORE_COLUMN, &column)
}

/// `row_id,scorer,score,statement` rows for audit.
pub fn statements_csv(scored: &[ScoredStatement]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row_id", "scorer", "score", "statement"])?;
    for s in scored {
        w.write_record([
            s.score.row_id.to_string(),
            s.score.scorer.clone(),
            s.score.score.to_string(),
            s.statement.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    pub enabled: bool,
    pub scorer: ScorerKind,
    pub template: StatementTemplate,
    pub remote: RemoteConfig,
    pub cache_dir: Option<PathBuf>,
    pub max_concurrency: usize,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            enabled: false,
            scorer: ScorerKind::Mock,
            template: StatementTemplate::default(),
            remote: RemoteConfig::default(),
            cache_dir: None,
            max_concurrency: 4,
        }
    }
}

impl LlmConfig {
    /// Builds the configured scorer; the mock is fit on `table`.
    pub fn build_scorer(&self, table: &DataTable) -> Result<Box<dyn Scorer>> {
        Ok(match self.scorer {
            ScorerKind::Mock => Box::new(MockScorer::fit(table)?),
            ScorerKind::Remote => Box::new(RemoteScorer::new(self.remote.clone())?),
        })
    }

    pub fn open_cache(&self) -> Result<Option<ScoreCache>> {
        self.cache_dir.as_deref().map(ScoreCache::open).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    fn table(rows: &[[f64; 4]]) -> DataTable {
        let mut t = DataTable::new(
            ["GRE", "TOEFL", "CGPA", "Research"].into_iter().map(Column::numeric).collect(),
        )
        .unwrap();
        for (i, r) in rows.iter().enumerate() {
            t.push_row(i as u64, r.iter().map(|v| Cell::Number(*v)).collect()).unwrap();
        }
        t
    }

    #[test]
    fn renders_with_one_decimal() {
        let t = table(&[[330.0, 110.0, 9.7, 1.0]]);
        let tpl = StatementTemplate::new("GRE {GRE}, CGPA {CGPA}").unwrap();
        assert_eq!(render_statement(&t, 0, &tpl).unwrap(), "GRE 330.0, CGPA 9.7");
        assert_eq!(render_statement(&t, 0, &tpl).unwrap(), render_statement(&t, 0, &tpl).unwrap());
        assert_eq!(tpl.required_fields(), ["GRE", "CGPA"]);
    }

    #[test]
    fn missing_field_is_named() {
        let mut t = DataTable::new(vec![Column::numeric("GRE"), Column::numeric("CGPA")]).unwrap();
        t.push_row(0, vec![Cell::Number(330.0), Cell::Missing]).unwrap();
        let tpl = StatementTemplate::new("GRE {GRE}, CGPA {CGPA}").unwrap();
        assert_eq!(render_statement(&t, 0, &tpl).unwrap_err().to_string(), "missing field CGPA");
        let narrow = DataTable::new(vec![Column::numeric("GRE")]).unwrap();
        assert_eq!(tpl.validate(&narrow).unwrap_err().to_string(), "missing field CGPA");
    }

    #[test]
    fn malformed_templates_rejected() {
        assert!(StatementTemplate::new("GRE {GRE").is_err());
        assert!(StatementTemplate::new("x {} y").is_err());
        assert!(StatementTemplate::new("x {a b} y").is_err());
    }

    #[test]
    fn mock_formula() {
        assert_eq!(mock_score(0.0, 0.0, 0.0, 0.0), 0.5);
        let expected = 1.0 / (1.0 + (-5.5f64).exp());
        assert!((mock_score(1.0, 1.0, 1.0, 1.0) - expected).abs() < 1e-15);
        assert!((expected - 0.995_929_862).abs() < 1e-9);
    }

    #[test]
    fn mock_scorer_uses_population_z_scores() {
        // GRE mean 320 sd 10, TOEFL mean 105 sd 5, CGPA mean 9 sd 0.5
        let t = table(&[[310.0, 100.0, 8.5, 0.0], [330.0, 110.0, 9.5, 1.0]]);
        let m = MockScorer::fit(&t).unwrap();
        let a = m.score("", &t, 0).unwrap().score;
        let b = m.score("", &t, 1).unwrap().score;
        assert!((a - mock_score(-1.0, -1.0, -1.0, 0.0)).abs() < 1e-15);
        assert!((b - mock_score(1.0, 1.0, 1.0, 1.0)).abs() < 1e-15);
        assert_eq!(m.score("", &t, 1).unwrap(), m.score("", &t, 1).unwrap());
    }

    #[test]
    fn mock_is_monotone_in_each_input() {
        let base = [-0.3, 0.2, 0.4, 0.0];
        for k in 0..4 {
            let mut up = base;
            up[k] += 0.5;
            assert!(mock_score(up[0], up[1], up[2], up[3]) >= mock_score(base[0], base[1], base[2], base[3]));
        }
    }

    #[test]
    fn augment_and_drop_is_identity() {
        let x = FeatureMatrix::from_rows(
            &[vec![1.0, 2.0], vec![3.0, 4.0]],
            vec!["a".into(), "b".into()],
            vec![0, 1],
        )
        .unwrap();
        let scores: Vec<LlmScore> = x
            .row_ids()
            .iter()
            .map(|&id| LlmScore {
                row_id: id,
                score: 0.5,
                scorer: MOCK_SCORER_ID.into(),
                raw_response: None,
            })
            .collect();
        let y = augment_features(&x, &scores).unwrap();
        assert_eq!(y.n_features(), 3);
        assert_eq!(y.feature_names().last().unwrap(), SCORE_COLUMN);
        assert_eq!(y.column(2), [0.5, 0.5]);
        assert_eq!(y.labels(), x.labels());
        assert_eq!(y.without_last_column(), x);
        assert!(augment_features(&x, &scores[..1]).is_err());
    }

    #[test]
    fn cache_round_trip_and_concurrent_scoring() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ScoreCache::open(dir.path()).unwrap();
        let rows: Vec<[f64; 4]> = (0..20).map(|i| [300.0 + i as f64, 100.0 + (i % 7) as f64, 8.0 + 0.1 * i as f64, (i % 2) as f64]).collect();
        let t = table(&rows);
        let m = MockScorer::fit(&t).unwrap();
        let tpl = StatementTemplate::new("{GRE} {TOEFL} {CGPA} {Research}").unwrap();
        let serial = score_table(&m, &t, &tpl, None, 1).unwrap();
        let parallel = score_table(&m, &t, &tpl, Some(&cache), 4).unwrap();
        assert_eq!(serial, parallel);
        let files = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(files, 20);
        let hit = cache.get(MOCK_SCORER_ID, &serial[3].statement).unwrap();
        assert_eq!(hit.score, serial[3].score.score);
        assert!(cache.get("other", &serial[3].statement).is_none());
        let csv = statements_csv(&serial[..1]).unwrap();
        assert!(csv.starts_with("row_id,scorer,score,statement\n0,mock-v1,"));
    }

    /// Serves canned HTTP responses in order, one per connection.
    fn serve(responses: Vec<(u16, &'static str)>) -> (String, std::thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/score", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            for (status, body) in responses {
                let (mut stream, _) = listener.accept().unwrap();
                let mut buf = Vec::new();
                let mut chunk = [0u8; 1024];
                let body_start = loop {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                    if let Some(p) = buf.windows(4).position(|w| w == b"\r\n\r\n") {
                        break p + 4;
                    }
                };
                let head = String::from_utf8_lossy(&buf[..body_start]).to_ascii_lowercase();
                let len: usize = head
                    .lines()
                    .find_map(|l| l.strip_prefix("content-length:"))
                    .map(|v| v.trim().parse().unwrap())
                    .unwrap_or(0);
                while buf.len() < body_start + len {
                    let n = stream.read(&mut chunk).unwrap();
                    buf.extend_from_slice(&chunk[..n]);
                }
                bodies.push(String::from_utf8_lossy(&buf[body_start..body_start + len]).into_owned());
                let reply = format!(
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
                stream.write_all(reply.as_bytes()).unwrap();
            }
            bodies
        });
        (url, handle)
    }

    fn remote(url: String) -> RemoteScorer {
        RemoteScorer::new(RemoteConfig {
            endpoint: url,
            backoff_ms: 1,
            timeout_secs: 5,
            token_env: "ADMITFAIR_TEST_UNSET_TOKEN".into(),
            ..RemoteConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn remote_retries_then_clamps() {
        let (url, handle) = serve(vec![(503, "busy"), (200, "{\"score\": 1.7}")]);
        let t = table(&[[330.0, 110.0, 9.7, 1.0]]);
        let r = remote(url).score("hello", &t, 0).unwrap();
        assert_eq!(r.score, 1.0);
        assert_eq!(r.raw_response.as_deref(), Some("{\"score\": 1.7}"));
        let bodies = handle.join().unwrap();
        let sent: serde_json::Value = serde_json::from_str(&bodies[1]).unwrap();
        assert_eq!(sent["statement"], "hello");
        assert_eq!(sent["rubric"], DEFAULT_RUBRIC);
    }

    #[test]
    fn remote_gives_up_with_raw_response() {
        let (url, handle) = serve(vec![(200, "nope"); 4]);
        let t = table(&[[330.0, 110.0, 9.7, 1.0]]);
        match remote(url).score("hello", &t, 0).unwrap_err() {
            Error::Scorer { raw_response, message, .. } => {
                assert_eq!(raw_response.as_deref(), Some("nope"));
                assert!(message.contains("4 attempts"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
        handle.join().unwrap();
    }

    #[test]
    fn remote_client_errors_are_not_retried() {
        let (url, handle) = serve(vec![(400, "{\"error\": \"bad\"}")]);
        let t = table(&[[330.0, 110.0, 9.7, 1.0]]);
        assert!(remote(url).score("hello", &t, 0).is_err());
        assert_eq!(handle.join().unwrap().len(), 1);
    }
}
