//! Command-line front end: `train`, `evaluate`, `benchmark`, `sweep`.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand};

use posbias::evaluation::{write_reports_csv, MetricsReport};
use posbias::experiment::{self, ExperimentConfig};
use posbias::trainer::write_history_csv;
use posbias::FactorModel;

#[derive(Parser)]
#[command(
    name = "posbias",
    version,
    about = "Position-bias regularized matrix factorization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model on the train split and write it with its loss history.
    Train(Flags),
    /// Score a saved model on the test split.
    Evaluate(Flags),
    /// Train and score every selected algorithm on one shared split.
    Benchmark(Flags),
    /// Run position_bias_mf once per beta value.
    Sweep(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// `key = value` file; explicit flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    /// movielens | csv
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    user_col: Option<String>,
    #[arg(long)]
    item_col: Option<String>,
    #[arg(long)]
    rating_col: Option<String>,
    #[arg(long)]
    delimiter: Option<String>,
    /// The CSV input starts with a header row.
    #[arg(long)]
    header: bool,
    #[arg(long)]
    test_fraction: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    /// Penalty weight; comma-separated list for benchmark and sweep.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Comma-separated list from classic_mf, cosine_mf, position_bias_mf, random, zipf.
    #[arg(long, visible_alias = "algorithms")]
    algorithm: Option<String>,
    #[arg(long)]
    k_top: Option<String>,
    /// literal | pareto
    #[arg(long)]
    matthew_variant: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// Loss-history CSV for `train` (default: <output>.history.csv).
    #[arg(long)]
    history: Option<String>,
    /// Model file for `evaluate`.
    #[arg(long)]
    model: Option<String>,
}

impl Flags {
    fn overrides(&self) -> HashMap<&'static str, String> {
        let pairs = [
            ("input", &self.input),
            ("format", &self.format),
            ("user-col", &self.user_col),
            ("item-col", &self.item_col),
            ("rating-col", &self.rating_col),
            ("delimiter", &self.delimiter),
            ("test-fraction", &self.test_fraction),
            ("seed", &self.seed),
            ("k", &self.k),
            ("lr", &self.lr),
            ("epochs", &self.epochs),
            ("beta", &self.beta),
            ("algorithm", &self.algorithm),
            ("k-top", &self.k_top),
            ("matthew-variant", &self.matthew_variant),
            ("output", &self.output),
            ("history", &self.history),
            ("model", &self.model),
        ];
        let mut map: HashMap<_, _> = pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        if self.header {
            map.insert("header", "true".into());
        }
        map
    }

    fn resolve(&self) -> posbias::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = &self.config {
            config.apply_kv_file(path)?;
        }
        experiment::apply_overrides(&mut config, &self.overrides())?;
        config.validate()?;
        Ok(config)
    }
}

fn usage_error(message: impl std::fmt::Display) -> ! {
    Cli::command()
        .error(ErrorKind::ValueValidation, message)
        .exit()
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn emit_reports(config: &ExperimentConfig, reports: &[MetricsReport]) -> anyhow::Result<bool> {
    let mut buf = Vec::new();
    write_reports_csv(reports, &mut buf)?;
    emit(config.output.as_deref(), &buf)?;
    for r in reports.iter().filter(|r| !r.is_ok()) {
        eprintln!(
            "{} (beta {}) failed: {}",
            r.algorithm,
            r.beta,
            r.error.as_deref().unwrap_or("")
        );
    }
    Ok(reports.iter().all(MetricsReport::is_ok))
}

fn train(config: &ExperimentConfig) -> anyhow::Result<bool> {
    let Some(output) = config.output.as_deref() else {
        usage_error("train requires --output <model file>");
    };
    let dataset = config.load_dataset()?;
    let (outcome, split) = experiment::train_on_split(config, &dataset)?;
    outcome.model.save(output)?;
    let history_path = config.history_output.clone().unwrap_or_else(|| {
        let mut p = output.as_os_str().to_owned();
        p.push(".history.csv");
        PathBuf::from(p)
    });
    let mut buf = Vec::new();
    write_history_csv(&outcome.history, &mut buf)?;
    emit(Some(&history_path), &buf)?;
    let last = outcome.final_loss();
    println!(
        "trained on {} interactions ({} test held out); final loss {} (fit {}, penalty {})",
        split.train.len(),
        split.test.len(),
        last.total,
        last.fit,
        last.penalty
    );
    Ok(true)
}

fn evaluate(config: &ExperimentConfig) -> anyhow::Result<bool> {
    let Some(model_path) = config.model.as_deref() else {
        usage_error("evaluate requires --model <model file>");
    };
    let dataset = config.load_dataset()?;
    let model = FactorModel::load(model_path)?;
    let label = match config.methods.as_slice() {
        [only] => only.name().to_owned(),
        _ => "model".to_owned(),
    };
    let mut report = experiment::evaluate_model(config, &dataset, &model, &label)?;
    report.beta = config.betas.first().copied().unwrap_or(0.0);
    emit_reports(config, &[report])
}

fn run(command: &Command) -> anyhow::Result<bool> {
    let flags = match command {
        Command::Train(f) | Command::Evaluate(f) | Command::Benchmark(f) | Command::Sweep(f) => f,
    };
    let config = flags.resolve().unwrap_or_else(|e| usage_error(e));
    if config.input.is_none() {
        Cli::command()
            .error(
                ErrorKind::MissingRequiredArgument,
                "--input <path> is required",
            )
            .exit();
    }
    match command {
        Command::Train(_) => train(&config),
        Command::Evaluate(_) => evaluate(&config),
        Command::Benchmark(_) => {
            let dataset = config.load_dataset()?;
            emit_reports(&config, &experiment::run_benchmark(&config, &dataset)?)
        }
        Command::Sweep(_) => {
            if config.betas.len() < 2 {
                bail!("sweep needs --beta with at least two values");
            }
            let dataset = config.load_dataset()?;
            emit_reports(&config, &experiment::run_sweep(&config, &dataset)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
