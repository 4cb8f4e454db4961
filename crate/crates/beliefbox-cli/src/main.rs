//! Command-line runner for belief-box debate experiments.

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "beliefbox",
    version,
    about = "Multi-agent debate experiments with explicit belief boxes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment (open-mindedness, persuasion, or peer-pressure).
    Run(RunArgs),
    /// Score the BFI-2 inventory across open-mindedness levels.
    Bfi2(Bfi2Args),
    /// Train the belief-update predictor from transcript JSONL.
    TrainPredictor(TrainPredictorArgs),
    /// Evaluate a trained predictor against transcript JSONL.
    EvalPredictor(EvalPredictorArgs),
    /// Merge run directories into plot-ready data files.
    Report(ReportArgs),
}

#[derive(Args)]
struct BackendFlags {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Chat-completions endpoint base URL.
    #[arg(long)]
    backend_url: Option<String>,
    /// Model name sent on the wire.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    /// Parallel-debate limit (live backends only).
    #[arg(long)]
    concurrency: Option<usize>,
    /// JSON script file; selects the deterministic scripted backend.
    #[arg(long)]
    scripted: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
}

impl BackendFlags {
    fn apply(&self, config: &mut RunConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(concurrency) = self.concurrency {
            config.concurrency = Some(concurrency);
        }
        if let Some(runs) = self.runs {
            config.conditions.runs = Some(runs);
        }
        if let Some(path) = &self.scripted {
            let section = config.scripted.get_or_insert_with(Default::default);
            section.path = Some(path.clone());
        }
        if self.backend_url.is_some() || self.model.is_some() || self.temperature.is_some() {
            let section = config.backend.get_or_insert_with(Default::default);
            if let Some(url) = &self.backend_url {
                section.base_url = Some(url.clone());
            }
            if let Some(model) = &self.model {
                section.model = Some(model.clone());
            }
            if let Some(t) = self.temperature {
                section.temperature = Some(t);
            }
        }
    }

    fn load_config(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        self.apply(&mut config);
        Ok(config)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: BackendFlags,
    /// bfi2, open-mindedness, persuasion, or peer-pressure.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// mmlu or aporia.
    #[arg(long)]
    dataset_kind: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    rounds: Option<usize>,
    /// Seeded subsample size drawn from the dataset.
    #[arg(long)]
    sample_count: Option<usize>,
    /// Comma-separated open-mindedness levels.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u8>>,
    /// Comma-separated peer group sizes.
    #[arg(long, value_delimiter = ',')]
    group_sizes: Option<Vec<usize>>,
    /// Comma-separated persuasion conditions (p=1, p=5, not_p=1, not_p=5, neutral).
    #[arg(long, value_delimiter = ',')]
    conditions: Option<Vec<String>>,
}

#[derive(Args)]
struct Bfi2Args {
    #[command(flatten)]
    common: BackendFlags,
    /// JSON item bank with {id, text, trait, reverse} records.
    #[arg(long)]
    item_bank: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u8>>,
}

#[derive(Args)]
struct TrainPredictorArgs {
    /// Transcript JSONL file(s), repeatable.
    #[arg(long, required = true)]
    transcripts: Vec<PathBuf>,
    /// Output model file (JSON).
    #[arg(long)]
    out: PathBuf,
    /// ridge or forest.
    #[arg(long, default_value = "ridge")]
    regressor: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of trees for the forest regressor.
    #[arg(long, default_value_t = 100)]
    trees: usize,
    /// Statement text mined per reassessment: full-window or last-turn.
    #[arg(long, default_value = "full-window")]
    granularity: String,
}

#[derive(Args)]
struct EvalPredictorArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, required = true)]
    transcripts: Vec<PathBuf>,
    /// Evaluate on all mined examples instead of the held-out test split.
    #[arg(long)]
    all: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Run output directory, repeatable.
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let mut config = args.common.load_config()?;
            if let Some(experiment) = &args.experiment {
                config.experiment = Some(experiment.clone());
            }
            if let Some(dataset) = &args.dataset {
                config.dataset = Some(dataset.clone());
            }
            if let Some(kind) = &args.dataset_kind {
                config.dataset_kind = Some(kind.clone());
            }
            if let Some(rounds) = args.rounds {
                config.conditions.rounds = Some(rounds);
            }
            if let Some(n) = args.sample_count {
                config.sample_count = Some(n);
            }
            if let Some(levels) = &args.levels {
                config.conditions.levels = Some(levels.clone());
            }
            if let Some(sizes) = &args.group_sizes {
                config.conditions.group_sizes = Some(sizes.clone());
            }
            if let Some(conditions) = &args.conditions {
                config.conditions.persuasion = Some(conditions.clone());
            }
            commands::cmd_run(&config, &args.out)
        }
        Command::Bfi2(args) => {
            let mut config = args.common.load_config()?;
            if let Some(bank) = &args.item_bank {
                config.item_bank = Some(bank.clone());
            }
            if let Some(levels) = &args.levels {
                config.conditions.levels = Some(levels.clone());
            }
            commands::cmd_bfi2(&config, &args.out)
        }
        Command::TrainPredictor(args) => commands::cmd_train_predictor(&commands::TrainArgs {
            transcripts: args.transcripts,
            out: args.out,
            regressor: args.regressor,
            seed: args.seed,
            trees: args.trees,
            granularity: args.granularity,
        }),
        Command::EvalPredictor(args) => commands::cmd_eval_predictor(&commands::EvalArgs {
            model: args.model,
            transcripts: args.transcripts,
            all: args.all,
        }),
        Command::Report(args) => commands::cmd_report(&args.runs, &args.out),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
