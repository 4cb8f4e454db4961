//! Subcommand implementations. Every run writes the same five artifacts into
//! its output directory: transcripts.jsonl, results.csv, summary.json, the
//! resolved config.toml, and run.log.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use beliefbox::dataset::{load_aporia, load_mmlu, sample_items};
use beliefbox::debate::{parse_jsonl, rows_to_jsonl, DebateConfig, TranscriptRow};
use beliefbox::experiment::{
    load_item_bank, run_bfi2, run_openmindedness, run_peer_pressure, run_persuasion, Bfi2Options,
    DatasetKind, ExperimentKind, ExperimentResult, PeerDataset, PeerPressureOptions, RunOutput,
};
use beliefbox::predictor::{
    evaluate, load_model, mine_examples, save_model, split_dataset, train, ForestParams,
    RegressorKind, StatementGranularity, TrainOptions,
};

use crate::config::RunConfig;

/// Run one experiment and write its output directory.
pub fn cmd_run(config: &RunConfig, out: &Path) -> Result<()> {
    let experiment = config.experiment_kind()?;
    if experiment == ExperimentKind::Bfi2 {
        bail!("use the `bfi2` subcommand for the personality inventory");
    }
    let spec = config.condition_spec()?;
    let dataset_path = config
        .dataset
        .as_ref()
        .context("no dataset path (use --dataset or the config file)")?;
    let dataset_kind = config
        .dataset_kind()?
        .context("no dataset kind (use --dataset-kind mmlu|aporia)")?;

    // validate all inputs before creating any output
    let mmlu;
    let aporia;
    match dataset_kind {
        DatasetKind::Mmlu => {
            mmlu = load_mmlu(dataset_path)?;
            aporia = Vec::new();
        }
        DatasetKind::Aporia => {
            aporia = load_aporia(dataset_path)?;
            mmlu = Vec::new();
        }
    }
    let (backend, scripted) = config.build_backend()?;
    // queue-style scripts are consumed in call order, so scripted runs stay
    // serial for reproducibility
    let concurrency = if scripted {
        1
    } else {
        config.concurrency.unwrap_or(4)
    };
    let debate_config = DebateConfig {
        rounds: config.conditions.rounds.unwrap_or(4),
        runs: spec.runs,
        seed: config.seed,
        ..DebateConfig::default()
    };

    let output = match (experiment, dataset_kind) {
        (ExperimentKind::OpenMindedness, DatasetKind::Aporia) => {
            let samples = match config.sample_count {
                Some(n) => sample_items(&aporia, n, config.seed)?,
                None => aporia,
            };
            run_openmindedness(
                &backend,
                &samples,
                &spec.levels,
                &spec.directions,
                spec.runs,
            )?
        }
        (ExperimentKind::Persuasion, DatasetKind::Aporia) => {
            let samples = match config.sample_count {
                Some(n) => sample_items(&aporia, n, config.seed)?,
                None => aporia,
            };
            run_persuasion(
                &backend,
                &samples,
                &spec.conditions,
                &debate_config,
                concurrency,
            )?
        }
        (ExperimentKind::PeerPressure, kind) => {
            let dataset = match kind {
                DatasetKind::Mmlu => PeerDataset::Mmlu(match config.sample_count {
                    Some(n) => sample_items(&mmlu, n, config.seed)?,
                    None => mmlu,
                }),
                DatasetKind::Aporia => PeerDataset::Aporia(match config.sample_count {
                    Some(n) => sample_items(&aporia, n, config.seed)?,
                    None => aporia,
                }),
            };
            let options = PeerPressureOptions {
                group_sizes: spec.group_sizes.clone(),
                ..PeerPressureOptions::default()
            };
            run_peer_pressure(&backend, &dataset, &options, &debate_config, concurrency)?
        }
        (kind, dataset) => bail!(
            "experiment {} does not run on the {} dataset",
            kind.name(),
            dataset.name()
        ),
    };

    write_run_outputs(out, config, &output)?;
    print_result(&output.result);
    println!("wrote {}", out.display());
    Ok(())
}

/// Score the BFI-2 inventory across open-mindedness levels.
pub fn cmd_bfi2(config: &RunConfig, out: &Path) -> Result<()> {
    let bank_path = config
        .item_bank
        .as_ref()
        .context("no item bank (use --item-bank or the config file)")?;
    let items = load_item_bank(bank_path)?;
    let (backend, _) = config.build_backend()?;
    let traits: Vec<_> = {
        // score the traits present in the bank, in enum order
        let mut present: Vec<_> = beliefbox::experiment::TraitName::ALL
            .into_iter()
            .filter(|t| items.iter().any(|i| i.trait_name == *t))
            .collect();
        present.sort();
        present
    };
    let options = Bfi2Options {
        levels: config
            .conditions
            .levels
            .clone()
            .unwrap_or_else(|| vec![1, 2, 3, 4, 5]),
        runs: config.conditions.runs.unwrap_or(3),
        traits,
    };
    let output = run_bfi2(&backend, &items, &options)?;
    write_run_outputs(out, config, &output)?;
    print_result(&output.result);
    println!("wrote {}", out.display());
    Ok(())
}

pub struct TrainArgs {
    pub transcripts: Vec<PathBuf>,
    pub out: PathBuf,
    pub regressor: String,
    pub seed: u64,
    pub trees: usize,
    pub granularity: String,
}

/// Train the belief-update predictor from transcript JSONL files.
pub fn cmd_train_predictor(args: &TrainArgs) -> Result<()> {
    let granularity = match args.granularity.as_str() {
        "full-window" => StatementGranularity::FullWindow,
        "last-turn" => StatementGranularity::LastTurn,
        other => bail!("unknown granularity {other:?} (expected full-window or last-turn)"),
    };
    let rows = read_transcript_rows(&args.transcripts)?;
    let examples = mine_examples(&rows, granularity);
    println!(
        "mined {} reassessment examples from {} rows",
        examples.len(),
        rows.len()
    );
    let regressor = match args.regressor.as_str() {
        "ridge" => RegressorKind::Ridge,
        "forest" => RegressorKind::Forest,
        other => bail!("unknown regressor {other:?} (expected ridge or forest)"),
    };
    let options = TrainOptions {
        seed: args.seed,
        regressor,
        forest: ForestParams {
            trees: args.trees,
            seed: args.seed,
            ..ForestParams::default()
        },
        granularity,
        ..TrainOptions::default()
    };
    let (model, report) = train(&examples, &options)?;
    save_model(&model, &args.out)?;
    println!(
        "split: {} train / {} validation / {} test",
        report.train_size, report.validation_size, report.test_size
    );
    if let Some(penalty) = report.chosen_penalty {
        println!("chosen ridge penalty: {penalty}");
    }
    if let Some(v) = report.validation_mae {
        println!("validation MAE {v:.3}");
    }
    println!("test MAE {:.3}", report.test.mae);
    println!("baseline MAE {:.3}", report.test.baseline_mae);
    println!("wrote {}", args.out.display());
    Ok(())
}

pub struct EvalArgs {
    pub model: PathBuf,
    pub transcripts: Vec<PathBuf>,
    /// Evaluate on all mined examples instead of the held-out test split.
    pub all: bool,
}

/// Evaluate a trained predictor on transcript JSONL files.
pub fn cmd_eval_predictor(args: &EvalArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let rows = read_transcript_rows(&args.transcripts)?;
    let examples = mine_examples(&rows, model.config.granularity);
    if examples.is_empty() {
        bail!("no reassessment examples found in the given transcripts");
    }
    let subset = if args.all {
        examples
    } else {
        let (_, _, test) = split_dataset(&examples, model.config.seed);
        test
    };
    let report = evaluate(&model, &subset)?;
    println!("MAE {:.3}", report.mae);
    println!("baseline MAE {:.3}", report.baseline_mae);
    println!("n {}", report.n);
    Ok(())
}

/// Merge run directories into plot-ready per-figure data files.
pub fn cmd_report(run_dirs: &[PathBuf], out: &Path) -> Result<()> {
    if run_dirs.is_empty() {
        bail!("no run directories given (use --run <dir>, repeatable)");
    }
    let mut by_experiment: BTreeMap<String, Vec<(String, ExperimentResult)>> = BTreeMap::new();
    for dir in run_dirs {
        let summary_path = dir.join("summary.json");
        let raw = std::fs::read_to_string(&summary_path)
            .with_context(|| format!("reading {}", summary_path.display()))?;
        let result: ExperimentResult = serde_json::from_str(&raw)
            .with_context(|| format!("parsing {}", summary_path.display()))?;
        let source = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        by_experiment
            .entry(result.experiment.clone())
            .or_default()
            .push((source, result));
    }
    if by_experiment.is_empty() {
        bail!("no results found in the given run directories");
    }
    std::fs::create_dir_all(out)?;

    for (experiment, results) in &by_experiment {
        match experiment.as_str() {
            "open-mindedness" => {
                let mut csv = String::from("source,level,direction,n,change_rate\n");
                for (source, result) in results {
                    for row in &result.rows {
                        let level = label_field(&row.condition, "level").unwrap_or_default();
                        let direction =
                            label_field(&row.condition, "direction").unwrap_or_default();
                        csv.push_str(&format!(
                            "{source},{level},{direction},{},{:.6}\n",
                            row.n, row.values[0]
                        ));
                    }
                }
                std::fs::write(out.join("change_rate_by_level.csv"), csv)?;
            }
            "persuasion" => {
                let mut csv = String::from("source,condition,n,mean_belief_score\n");
                for (source, result) in results {
                    for row in &result.rows {
                        csv.push_str(&format!(
                            "{source},{},{},{:.6}\n",
                            row.condition, row.n, row.values[0]
                        ));
                    }
                }
                std::fs::write(out.join("mean_score_by_condition.csv"), csv)?;
            }
            "peer-pressure" => {
                let mut csv = String::from("source,group_size,n,change_rate,r,f,df1,df2,p,note\n");
                for (source, result) in results {
                    let (r, f, df1, df2, p) = match &result.regression {
                        Some(reg) => (
                            format!("{:.6}", reg.r),
                            format!("{:.6}", reg.f),
                            reg.df.0.to_string(),
                            reg.df.1.to_string(),
                            format!("{:.6}", reg.p),
                        ),
                        None => Default::default(),
                    };
                    let note = result.regression_note.clone().unwrap_or_default();
                    for row in &result.rows {
                        let size = label_field(&row.condition, "group_size").unwrap_or_default();
                        csv.push_str(&format!(
                            "{source},{size},{},{:.6},{r},{f},{df1},{df2},{p},{}\n",
                            row.n,
                            row.values[0],
                            csv_escape(&note)
                        ));
                    }
                }
                std::fs::write(out.join("rate_by_group_size.csv"), csv)?;
            }
            "bfi2" => {
                let mut csv = String::from("source,level,trait,score\n");
                for (source, result) in results {
                    for row in &result.rows {
                        let level = label_field(&row.condition, "level").unwrap_or_default();
                        for (name, value) in result.metric_names.iter().zip(&row.values) {
                            csv.push_str(&format!("{source},{level},{name},{value:.6}\n"));
                        }
                    }
                }
                std::fs::write(out.join("trait_scores_by_level.csv"), csv)?;
            }
            other => log::warn!("unknown experiment {other:?} in report inputs; skipped"),
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Pull `key=value` out of a condition label like "level=3,direction=x".
fn label_field(condition: &str, key: &str) -> Option<String> {
    condition
        .split(',')
        .find_map(|part| part.strip_prefix(&format!("{key}=")))
        .map(str::to_string)
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn read_transcript_rows(paths: &[PathBuf]) -> Result<Vec<TranscriptRow>> {
    if paths.is_empty() {
        bail!("no transcript files given");
    }
    let mut rows = Vec::new();
    for path in paths {
        let raw =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        rows.extend(parse_jsonl(&raw)?);
    }
    Ok(rows)
}

/// Write the five run artifacts in deterministic order.
fn write_run_outputs(out: &Path, config: &RunConfig, output: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("transcripts.jsonl"), rows_to_jsonl(&output.rows)?)?;
    std::fs::write(out.join("results.csv"), output.result.to_csv())?;
    std::fs::write(out.join("summary.json"), output.result.to_summary_json()?)?;
    std::fs::write(out.join("config.toml"), config.to_toml()?)?;
    std::fs::write(out.join("run.log"), run_log(output))?;
    Ok(())
}

fn run_log(output: &RunOutput) -> String {
    let result = &output.result;
    let mut log = format!(
        "experiment: {}\ndataset: {}\nrows: {}\nconditions: {}\n",
        result.experiment,
        result.dataset.as_deref().unwrap_or("-"),
        output.rows.len(),
        result.rows.len(),
    );
    let q = &result.quality;
    log.push_str(&format!(
        "data quality: parse_retries={} null_observations={} imputed={} excluded={} incomplete={}\n",
        q.parse_retries, q.null_observations, q.imputed_reassessments, q.excluded_trials,
        q.incomplete_debates,
    ));
    match (&result.regression, &result.regression_note) {
        (Some(reg), _) => log.push_str(&format!(
            "regression: r={:.4} F={:.4} df=({}, {}) p={:.6}{}\n",
            reg.r,
            reg.f,
            reg.df.0,
            reg.df.1,
            reg.p,
            if reg.perfect_fit {
                " (perfect fit)"
            } else {
                ""
            }
        )),
        (None, Some(note)) => log.push_str(&format!("regression: {note}\n")),
        (None, None) => {}
    }
    log
}

fn print_result(result: &ExperimentResult) {
    println!("condition\tn\t{}", result.metric_names.join("\t"));
    for row in &result.rows {
        let values: Vec<String> = row.values.iter().map(|v| format!("{v:.4}")).collect();
        println!("{}\t{}\t{}", row.condition, row.n, values.join("\t"));
    }
    if let Some(reg) = &result.regression {
        println!(
            "regression: r={:.4} F={:.4} df=({}, {}) p={:.6}",
            reg.r, reg.f, reg.df.0, reg.df.1, reg.p
        );
    } else if let Some(note) = &result.regression_note {
        println!("regression: {note}");
    }
    let q = &result.quality;
    if q.parse_retries + q.null_observations + q.excluded_trials + q.incomplete_debates > 0 {
        println!(
            "data quality: parse_retries={} null_observations={} imputed={} excluded={} incomplete={}",
            q.parse_retries,
            q.null_observations,
            q.imputed_reassessments,
            q.excluded_trials,
            q.incomplete_debates
        );
    }
}
