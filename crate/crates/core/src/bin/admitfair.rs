//! Command-line front end. Each subcommand runs one stage against files;
//! `run` chains all of them.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use admitfair::data::{clean_anomalies, generate_synthetic, write_csv_file, Cell, Column, SyntheticConfig};
use admitfair::evaluation::{compute_metrics, kfold_cv, write_accuracy_table};
use admitfair::explain::{coefficient_importance, permutation_importance};
use admitfair::fairness::{audit, SensitiveAttribute};
use admitfair::llm;
use admitfair::models::{Classifier, ModelKind, ScaledModel, MODEL_FORMAT_VERSION};
use admitfair::pipeline::{
    build_features, export_report, prepare_table, read_table, run_pipeline, DeployedAugmentation, DeployedModel,
    PipelineConfig, RunBundle, ROW_ID_COLUMN,
};
use admitfair::{rng, Error, Result};

#[derive(Parser)]
#[command(name = "admitfair", version, about = "Fairness-aware admission prediction")]
struct Cli {
    /// Seed for every random stream; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic graduate-admissions table to synthetic.csv.
    Generate {
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        anomalies: Option<usize>,
        /// Generator settings (TOML).
        #[arg(long)]
        synthetic: Option<PathBuf>,
    },
    /// Label, impute and remove anomalous rows: cleaned.csv, cleaning_log.json.
    Clean {
        #[arg(long)]
        input: PathBuf,
    },
    /// Fit one model on every row of the input: model.json.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "logistic_regression")]
        model: ModelKind,
    },
    /// Score a saved model (predictions.csv, evaluation.json) or, without
    /// --model, cross-validate all five kinds (cv_reports.json, model_accuracy.csv).
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Fairness audit of a predictions file: fairness.json, fairness_groups.csv.
    Audit {
        #[arg(long)]
        predictions: PathBuf,
    },
    /// Feature importance of a saved model: explanations.json, importance.csv.
    Explain {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Append LLM_score to a table: augmented.csv, statements.csv.
    Augment {
        #[arg(long)]
        input: PathBuf,
    },
    /// Full pipeline; writes the report bundle.
    Run,
    /// Print a summary of a report.json and write summary.txt.
    Report {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    fs::create_dir_all(&cli.out).map_err(|e| Error::Io {
        path: cli.out.clone(),
        source: e,
    })?;
    Ok(&cli.out)
}

fn announce(path: &Path) {
    println!("{}", path.display());
}

fn execute(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Generate {
            rows,
            anomalies,
            synthetic,
        } => {
            let mut syn = match synthetic {
                Some(p) => SyntheticConfig::from_file(p)?,
                None => config.data.synthetic.clone(),
            };
            if let Some(r) = rows {
                syn.rows = *r;
            }
            if let Some(a) = anomalies {
                syn.anomalies = *a;
            }
            let table = generate_synthetic(&syn, config.seed)?;
            let path = out_dir(cli)?.join("synthetic.csv");
            write_csv_file(&table, &path, Some(ROW_ID_COLUMN))?;
            announce(&path);
        }
        Command::Clean { input } => {
            let (prepared, _) = prepare_table(&read_table(input)?, &config)?;
            let (cleaned, log) = clean_anomalies(&prepared, &config.cleaning.rule)?;
            let dir = out_dir(cli)?;
            let table_path = dir.join("cleaned.csv");
            write_csv_file(&cleaned, &table_path, Some(ROW_ID_COLUMN))?;
            let log_path = dir.join("cleaning_log.json");
            write(&log_path, &serde_json::to_string_pretty(&log)?)?;
            eprintln!("removed {} of {} rows", log.removed_row_ids.len(), log.rows_before);
            announce(&table_path);
            announce(&log_path);
        }
        Command::Train { input, model } => {
            let (table, _) = prepare_table(&read_table(input)?, &config)?;
            let (plan, mut x) = build_features(&table, &config)?;
            let mut augmentation = None;
            if config.llm.enabled {
                let aug = admitfair::pipeline::stages::augment(&table, &x, &config.llm)?;
                x = aug.matrix;
                augmentation = aug.mock.map(|scorer| DeployedAugmentation {
                    template: config.llm.template.clone(),
                    scorer,
                });
            }
            let seed = rng::derive_seed(config.seed, "final", 0);
            let fitted = ScaledModel::fit(*model, &x, &config.models, seed)?;
            let deployed = DeployedModel {
                format_version: MODEL_FORMAT_VERSION,
                plan,
                llm_feature: config.llm.enabled,
                augmentation,
                model: fitted,
            };
            let path = out_dir(cli)?.join("model.json");
            write(&path, &deployed.to_json()?)?;
            announce(&path);
        }
        Command::Evaluate { input, model: Some(model) } => {
            let deployed = DeployedModel::load(model)?;
            let (table, _) = prepare_table(&read_table(input)?, &config)?;
            let x = deployed.features(&table)?;
            let scores = deployed.predict_proba(&x)?;
            let preds: Vec<u8> = scores.iter().map(|&p| u8::from(p >= config.fairness.threshold)).collect();
            let mut report = compute_metrics(x.labels(), &preds, Some(&scores))?;
            report.model = Some(deployed.kind());

            let mut out = admitfair::data::DataTable::new(vec![
                Column::numeric("label"),
                Column::numeric("probability"),
                Column::numeric("prediction"),
            ])?;
            for (i, &id) in x.row_ids().iter().enumerate() {
                out.push_row(
                    id,
                    vec![
                        Cell::Number(f64::from(x.labels()[i])),
                        Cell::Number(scores[i]),
                        Cell::Number(f64::from(preds[i])),
                    ],
                )?;
            }
            for (name, groups) in x.sensitive() {
                out.add_column(
                    Column::categorical(name.as_str()),
                    groups.iter().map(|g| Cell::Category(g.clone())).collect(),
                )?;
            }
            let dir = out_dir(cli)?;
            let pred_path = dir.join("predictions.csv");
            write_csv_file(&out, &pred_path, Some(ROW_ID_COLUMN))?;
            let eval_path = dir.join("evaluation.json");
            write(&eval_path, &report.to_json()?)?;
            eprintln!("accuracy {:.4}", report.accuracy);
            announce(&pred_path);
            announce(&eval_path);
        }
        Command::Evaluate { input, model: None } => {
            let (table, _) = prepare_table(&read_table(input)?, &config)?;
            let (_, x) = build_features(&table, &config)?;
            let cv = config.cv_config();
            let mut reports = Vec::new();
            let mut accuracies = Vec::new();
            for kind in ModelKind::ALL {
                let r = kfold_cv(&x, kind, &config.models, &cv)?.report;
                eprintln!("{:<20} {:.4}", kind.display_name(), r.accuracy);
                accuracies.push((kind, r.accuracy));
                reports.push(r);
            }
            let dir = out_dir(cli)?;
            let json_path = dir.join("cv_reports.json");
            write(&json_path, &serde_json::to_string_pretty(&reports)?)?;
            let csv_path = dir.join("model_accuracy.csv");
            let file = fs::File::create(&csv_path).map_err(|e| Error::Io {
                path: csv_path.clone(),
                source: e,
            })?;
            write_accuracy_table(&accuracies, file)?;
            announce(&json_path);
            announce(&csv_path);
        }
        Command::Audit { predictions } => {
            let table = read_table(predictions)?;
            let labels = binary_column(&table, "label")?;
            let preds = binary_column(&table, "prediction")?;
            let attrs: Vec<SensitiveAttribute> = table
                .columns()
                .iter()
                .enumerate()
                .filter(|(_, c)| !["label", "probability", "prediction"].contains(&c.name.as_str()))
                .map(|(j, c)| {
                    let groups = table
                        .column_cells(j)
                        .map(|cell| match cell {
                            Cell::Category(s) => s.clone(),
                            Cell::Number(v) => v.to_string(),
                            Cell::Missing => "missing".to_string(),
                        })
                        .collect();
                    SensitiveAttribute::from_assignment(&c.name, groups)
                })
                .collect();
            if attrs.is_empty() {
                return Err(Error::Fairness("predictions file has no group columns".into()));
            }
            let report = audit(&preds, &labels, &attrs, config.fairness.tau)?;
            for a in &report.attributes {
                eprintln!(
                    "{}: dp gap {:.4}, eo gap {:.4}{}",
                    a.attribute,
                    a.dp_gap,
                    a.eo_gap,
                    if a.flagged { " (flagged)" } else { "" }
                );
            }
            let dir = out_dir(cli)?;
            let json_path = dir.join("fairness.json");
            write(&json_path, &serde_json::to_string_pretty(&report)?)?;
            let csv_path = dir.join("fairness_groups.csv");
            write(&csv_path, &report.groups_csv()?)?;
            announce(&json_path);
            announce(&csv_path);
        }
        Command::Explain { input, model } => {
            let deployed = DeployedModel::load(model)?;
            let (table, _) = prepare_table(&read_table(input)?, &config)?;
            let x = deployed.features(&table)?;
            let mut explanations = Vec::new();
            if deployed.kind() == ModelKind::LogisticRegression {
                explanations.push(coefficient_importance(&deployed.model.classifier)?);
            }
            explanations.push(permutation_importance(
                &deployed,
                &x,
                config.explain.repeats,
                rng::derive_seed(config.seed, "permutation", 0),
            )?);
            let dir = out_dir(cli)?;
            let json_path = dir.join("explanations.json");
            write(&json_path, &serde_json::to_string_pretty(&explanations)?)?;
            let csv_path = dir.join("importance.csv");
            write(&csv_path, &admitfair::pipeline::export::importance_csv(&explanations)?)?;
            announce(&json_path);
            announce(&csv_path);
        }
        Command::Augment { input } => {
            let mut table = read_table(input)?;
            let scorer = config.llm.build_scorer(&table)?;
            let cache = config.llm.open_cache()?;
            let scored = llm::score_table(
                scorer.as_ref(),
                &table,
                &config.llm.template,
                cache.as_ref(),
                config.llm.max_concurrency,
            )?;
            table.add_column(
                Column::numeric(llm::SCORE_COLUMN),
                scored.iter().map(|s| Cell::Number(s.score.score)).collect(),
            )?;
            let dir = out_dir(cli)?;
            let table_path = dir.join("augmented.csv");
            write_csv_file(&table, &table_path, Some(ROW_ID_COLUMN))?;
            let st_path = dir.join("statements.csv");
            write(&st_path, &llm::statements_csv(&scored)?)?;
            announce(&table_path);
            announce(&st_path);
        }
        Command::Run => {
            let run = run_pipeline(&config)?;
            for path in export_report(&run, &cli.out)? {
                announce(&path);
            }
        }
        Command::Report { input } => {
            let path = input.clone().unwrap_or_else(|| cli.out.join("report.json"));
            let text = fs::read_to_string(&path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let bundle: RunBundle = serde_json::from_str(&text)?;
            let summary = summarize(&bundle);
            print!("{summary}");
            let out = out_dir(cli)?.join("summary.txt");
            write(&out, &summary)?;
        }
    }
    Ok(())
}

fn binary_column(table: &admitfair::data::DataTable, name: &str) -> Result<Vec<u8>> {
    table
        .numeric_column(name)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| match v {
            Some(x) if x == 0.0 || x == 1.0 => Ok(x as u8),
            _ => Err(Error::ColumnKind {
                column: name.to_string(),
                message: format!("row {} is not 0 or 1", table.row_ids()[i]),
            }),
        })
        .collect()
}

fn summarize(b: &RunBundle) -> String {
    let mut s = format!("seed {}  schema v{}  tool {}\n", b.seed, b.schema_version, b.tool_version);
    if let Some(c) = &b.cleaning {
        s += &format!("cleaning: {} -> {} rows\n", c.rows_before, c.rows_after);
    }
    s += &format!("{:<20} {:>10} {:>10}\n", "model", "uncleaned", "cv");
    for kind in ModelKind::ALL {
        let pct = |v: Option<f64>| v.map_or("-".to_string(), |a| format!("{:.1}%", 100.0 * a));
        s += &format!(
            "{:<20} {:>10} {:>10}\n",
            kind.display_name(),
            pct(b.uncleaned_cv_accuracy(kind)),
            pct(b.cv_accuracy(kind))
        );
    }
    s += &format!(
        "selected {}; test accuracy {:.3}, f1 {:.3}\n",
        b.selected_model.display_name(),
        b.test_report.accuracy,
        b.test_report.f1
    );
    for a in &b.fairness.attributes {
        s += &format!(
            "{}: dp gap {:.3}, eo gap {:.3}{}\n",
            a.attribute,
            a.dp_gap,
            a.eo_gap,
            if a.flagged { " (flagged)" } else { "" }
        );
    }
    if let Some(e) = b.explanations.first() {
        let top: Vec<&str> = e.ranking().into_iter().take(3).collect();
        s += &format!("top features: {}\n", top.join(", "));
    }
    s
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
