//! Benchmark and sweep drivers shared by the CLI and the examples.
//!
//! A benchmark splits the dataset once, then trains or constructs every
//! requested method on the same train side and scores it on the same test
//! side. Runs execute in parallel but rows come back in declared order.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::baselines::BaselineScorer;
use crate::data::{self, CsvOptions, RatingsDataset, Split, SplitSpec};
use crate::error::{Error, Result};
use crate::evaluation::{self, MatthewVariant, MetricsReport, Scorer};
use crate::model::FactorModel;
use crate::trainer::{self, Algorithm, TrainConfig, TrainOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Trained(Algorithm),
    Random,
    Zipf,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Trained(a) => a.name(),
            Method::Random => "random",
            Method::Zipf => "zipf",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Method::Random),
            "zipf" => Ok(Method::Zipf),
            other => other.parse().map(Method::Trained),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    Movielens,
    Csv,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens" => Ok(DatasetFormat::Movielens),
            "csv" => Ok(DatasetFormat::Csv),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// Everything one CLI invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub input: Option<PathBuf>,
    pub format: DatasetFormat,
    pub csv: CsvOptions,
    pub split: SplitSpec,
    /// Training hyperparameters; `algorithm` and `beta` are overridden per run.
    pub train: TrainConfig,
    pub methods: Vec<Method>,
    pub betas: Vec<f64>,
    pub k_top: usize,
    pub matthew_variant: MatthewVariant,
    pub output: Option<PathBuf>,
    pub history_output: Option<PathBuf>,
    pub model: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            input: None,
            format: DatasetFormat::Movielens,
            csv: CsvOptions::default(),
            split: SplitSpec::default(),
            train: TrainConfig::default(),
            methods: vec![
                Method::Trained(Algorithm::ClassicMf),
                Method::Trained(Algorithm::CosineMf),
                Method::Trained(Algorithm::PositionBiasMf),
                Method::Random,
                Method::Zipf,
            ],
            betas: vec![0.1],
            k_top: 10,
            matthew_variant: MatthewVariant::LiteralXmax,
            output: None,
            history_output: None,
            model: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "cannot parse {key} = {value:?} as a boolean"
        ))),
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl ExperimentConfig {
    /// Sets one option by its flag name (without the leading `--`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "input" => self.input = Some(value.into()),
            "format" => self.format = value.parse()?,
            "user-col" => self.csv.user_col = parse(key, value)?,
            "item-col" => self.csv.item_col = parse(key, value)?,
            "rating-col" => self.csv.rating_col = parse(key, value)?,
            "delimiter" => {
                let d = match value {
                    "tab" | "\\t" => b'\t',
                    _ if value.len() == 1 => value.as_bytes()[0],
                    _ => {
                        return Err(Error::Config(format!(
                            "delimiter must be a single byte, got {value:?}"
                        )))
                    }
                };
                self.csv.delimiter = d;
            }
            "header" => self.csv.has_header = parse_bool(key, value)?,
            "test-fraction" => self.split.test_fraction = parse(key, value)?,
            "drop-unseen" => self.split.drop_unseen = parse_bool(key, value)?,
            "seed" => {
                let seed = parse(key, value)?;
                self.split.seed = seed;
                self.train.seed = seed;
            }
            "k" => self.train.k = parse(key, value)?,
            "lr" => self.train.learning_rate = parse(key, value)?,
            "epochs" => self.train.epochs = parse(key, value)?,
            "init-scale" => self.train.init_scale = parse(key, value)?,
            "shuffle" => self.train.shuffle_each_epoch = parse_bool(key, value)?,
            "beta" => {
                self.betas = split_list(value)
                    .map(|b| parse(key, b))
                    .collect::<Result<_>>()?;
            }
            "algorithm" | "algorithms" => {
                self.methods = split_list(value).map(str::parse).collect::<Result<_>>()?;
            }
            "k-top" => self.k_top = parse(key, value)?,
            "matthew-variant" => self.matthew_variant = value.parse()?,
            "output" => self.output = Some(value.into()),
            "history" => self.history_output = Some(value.into()),
            "model" => self.model = Some(value.into()),
            other => return Err(Error::Config(format!("unknown option {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` text file. Blank lines and `#` comments are
    /// skipped.
    pub fn apply_kv_str(&mut self, text: &str) -> Result<()> {
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected `key = value`", idx + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_kv_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_kv_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        TrainConfig {
            beta: 0.0,
            ..self.train
        }
        .validate()?;
        if self.methods.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        let needs_beta = self
            .methods
            .contains(&Method::Trained(Algorithm::PositionBiasMf));
        if needs_beta && self.betas.is_empty() {
            return Err(Error::Config(
                "position_bias_mf needs at least one beta".into(),
            ));
        }
        if let Some(b) = self.betas.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return Err(Error::Config(format!("beta must be >= 0, got {b}")));
        }
        if self.k_top == 0 {
            return Err(Error::Config("k-top must be >= 1".into()));
        }
        Ok(())
    }

    pub fn load_dataset(&self) -> Result<RatingsDataset> {
        let path = self
            .input
            .as_ref()
            .ok_or_else(|| Error::Config("--input is required".into()))?;
        let (dataset, _report) = match self.format {
            DatasetFormat::Movielens => data::load_movielens(path)?,
            DatasetFormat::Csv => data::load_csv(path, &self.csv)?,
        };
        Ok(dataset)
    }

    /// `(method, beta)` pairs in declared order. Only `position_bias_mf`
    /// fans out over the beta list; everything else runs once at beta 0.
    pub fn runs(&self) -> Vec<(Method, f64)> {
        let mut runs = Vec::new();
        for &method in &self.methods {
            match method {
                Method::Trained(Algorithm::PositionBiasMf) => {
                    runs.extend(self.betas.iter().map(|&b| (method, b)));
                }
                _ => runs.push((method, 0.0)),
            }
        }
        runs
    }

    fn train_config(&self, algorithm: Algorithm, beta: f64) -> TrainConfig {
        TrainConfig {
            algorithm,
            beta,
            ..self.train
        }
    }
}

/// Trains one model on the train side of the configured split.
pub fn train_on_split(
    config: &ExperimentConfig,
    dataset: &RatingsDataset,
) -> Result<(TrainOutcome, Split)> {
    config.validate()?;
    let split = dataset.split(&config.split)?;
    let algorithm = match config.methods.first() {
        Some(Method::Trained(a)) => *a,
        Some(other) => {
            return Err(Error::Config(format!(
                "{other} is a baseline and cannot be trained"
            )))
        }
        None => Algorithm::PositionBiasMf,
    };
    let beta = config.betas.first().copied().unwrap_or(0.0);
    let outcome = trainer::train(&split.train, &config.train_config(algorithm, beta))?;
    Ok((outcome, split))
}

fn run_one(config: &ExperimentConfig, split: &Split, method: Method, beta: f64) -> MetricsReport {
    let result = (|| -> Result<MetricsReport> {
        let (label_k, label_epochs, scorer): (usize, usize, Box<dyn Scorer + Send>) = match method {
            Method::Trained(algorithm) => {
                let outcome = trainer::train(&split.train, &config.train_config(algorithm, beta))?;
                (config.train.k, config.train.epochs, Box::new(outcome.model))
            }
            Method::Random => (
                0,
                0,
                Box::new(BaselineScorer::random(
                    config.train.seed,
                    split.train.r_max(),
                )),
            ),
            Method::Zipf => (0, 0, Box::new(BaselineScorer::zipf(&split.train))),
        };
        let mut report = evaluation::evaluate_all(
            method.name(),
            scorer.as_ref(),
            &split.train,
            &split.test,
            config.k_top,
            config.matthew_variant,
        )?;
        report.beta = beta;
        report.k = label_k;
        report.epochs = label_epochs;
        report.seed = config.train.seed;
        Ok(report)
    })();
    result.unwrap_or_else(|e| {
        let mut failed = MetricsReport::failed(method.name(), beta, e.to_string());
        failed.seed = config.train.seed;
        failed.k_top = config.k_top;
        failed
    })
}

/// Runs every configured `(method, beta)` pair on one shared split.
pub fn run_benchmark(
    config: &ExperimentConfig,
    dataset: &RatingsDataset,
) -> Result<Vec<MetricsReport>> {
    config.validate()?;
    let split = dataset.split(&config.split)?;
    Ok(benchmark_split(config, &split, &config.runs()))
}

pub fn benchmark_split(
    config: &ExperimentConfig,
    split: &Split,
    runs: &[(Method, f64)],
) -> Vec<MetricsReport> {
    runs.par_iter()
        .map(|&(method, beta)| run_one(config, split, method, beta))
        .collect()
}

/// One `position_bias_mf` row per beta, ascending, all on the same split.
pub fn run_sweep(
    config: &ExperimentConfig,
    dataset: &RatingsDataset,
) -> Result<Vec<MetricsReport>> {
    let mut betas = config.betas.clone();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    if betas.len() < 2 {
        return Err(Error::Config(
            "sweep needs at least two distinct beta values".into(),
        ));
    }
    let config = ExperimentConfig {
        methods: vec![Method::Trained(Algorithm::PositionBiasMf)],
        betas,
        ..config.clone()
    };
    run_benchmark(&config, dataset)
}

/// Scores a saved model against the test side of the configured split.
pub fn evaluate_model(
    config: &ExperimentConfig,
    dataset: &RatingsDataset,
    model: &FactorModel,
    label: &str,
) -> Result<MetricsReport> {
    config.validate()?;
    if model.n() != dataset.n() || model.m() != dataset.m() {
        return Err(Error::Config(format!(
            "model is {}x{} but dataset is {}x{}",
            model.n(),
            model.m(),
            dataset.n(),
            dataset.m()
        )));
    }
    let split = dataset.split(&config.split)?;
    let mut report = evaluation::evaluate_all(
        label,
        model,
        &split.train,
        &split.test,
        config.k_top,
        config.matthew_variant,
    )?;
    report.k = model.k();
    report.seed = config.split.seed;
    Ok(report)
}

/// Flag-style overrides collected from the command line, applied after any
/// config file.
pub fn apply_overrides(
    config: &mut ExperimentConfig,
    overrides: &HashMap<&str, String>,
) -> Result<()> {
    let mut keys: Vec<_> = overrides.keys().copied().collect();
    keys.sort_unstable();
    for key in keys {
        config.set(key, &overrides[key])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_file_parsing() {
        let mut c = ExperimentConfig::default();
        c.apply_kv_str(
            "# comment\nformat = csv\ndelimiter = ;\nheader = true\nbeta = 0, 0.1 ,1\nseed=7\nalgorithms = zipf,cosine_mf\n",
        )
        .unwrap();
        assert_eq!(c.format, DatasetFormat::Csv);
        assert_eq!(c.csv.delimiter, b';');
        assert!(c.csv.has_header);
        assert_eq!(c.betas, vec![0.0, 0.1, 1.0]);
        assert_eq!((c.split.seed, c.train.seed), (7, 7));
        assert_eq!(
            c.methods,
            vec![Method::Zipf, Method::Trained(Algorithm::CosineMf)]
        );
        assert!(c.apply_kv_str("nonsense").is_err());
        assert!(c.apply_kv_str("colour = red").is_err());
    }

    #[test]
    fn runs_fan_out_over_beta() {
        let mut c = ExperimentConfig::default();
        c.set("algorithms", "cosine_mf,position_bias_mf,random")
            .unwrap();
        c.set("beta", "0,0.5").unwrap();
        let names: Vec<_> = c.runs().iter().map(|(m, b)| format!("{m}@{b}")).collect();
        assert_eq!(
            names,
            [
                "cosine_mf@0",
                "position_bias_mf@0",
                "position_bias_mf@0.5",
                "random@0"
            ]
        );
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = ExperimentConfig::default();
        c.set("beta", "-1").unwrap();
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.set("beta", "").unwrap();
        assert!(c.validate().is_err());
        assert!(ExperimentConfig::default()
            .set("algorithm", "dotmat")
            .is_err());
    }
}
