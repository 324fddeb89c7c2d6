//! MAE, Degree of Matthew Effect and the Position Bias Metric.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::data::RatingsDataset;
use crate::error::{Error, Result};
use crate::model::{self, FactorModel, PredictionMode, TopKLists};

/// Anything that can score `(user, item)` pairs: trained models and baselines.
pub trait Scorer: Sync {
    /// Ranking score; only its order matters.
    fn score(&self, user: usize, item: usize) -> f64;

    /// Prediction on the native rating scale, used for MAE.
    fn predicted_rating(&self, user: usize, item: usize) -> f64;

    /// Score on the `[0, 1]` click-probability scale compared against `1/m`.
    fn normalized_score(&self, user: usize, item: usize) -> f64;
}

impl Scorer for FactorModel {
    fn score(&self, user: usize, item: usize) -> f64 {
        FactorModel::score(self, user, item)
    }

    fn predicted_rating(&self, user: usize, item: usize) -> f64 {
        FactorModel::predicted_rating(self, user, item)
    }

    fn normalized_score(&self, user: usize, item: usize) -> f64 {
        match self.mode() {
            PredictionMode::Cosine => self.predict_cosine(user, item),
            PredictionMode::Dot => self.predicted_rating(user, item) / self.r_max(),
        }
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, user: usize, item: usize) -> f64 {
        (**self).score(user, item)
    }

    fn predicted_rating(&self, user: usize, item: usize) -> f64 {
        (**self).predicted_rating(user, item)
    }

    fn normalized_score(&self, user: usize, item: usize) -> f64 {
        (**self).normalized_score(user, item)
    }
}

/// Mean absolute error of `predicted_rating` over the test interactions.
pub fn mae<S: Scorer + ?Sized>(scorer: &S, test: &RatingsDataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sum: f64 = test
        .ratings()
        .iter()
        .map(|r| (scorer.predicted_rating(r.user, r.item) - r.value).abs())
        .sum();
    Ok(sum / test.len() as f64)
}

/// Mean of `(c - 1/m)^2` over test pairs, `c` being the normalized score.
pub fn position_bias_metric<S: Scorer + ?Sized>(
    scorer: &S,
    test: &RatingsDataset,
    m: usize,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if m == 0 {
        return Err(Error::Config("item count must be >= 1".into()));
    }
    let target = 1.0 / m as f64;
    let sum: f64 = test
        .ratings()
        .iter()
        .map(|r| (scorer.normalized_score(r.user, r.item) - target).powi(2))
        .sum();
    Ok(sum / test.len() as f64)
}

/// Reference frequency used by the Degree of Matthew Effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatthewVariant {
    /// `1 + n (sum ln(x_i / x_max))^-1`, as the formula is printed.
    #[default]
    LiteralXmax,
    /// `1 + n (sum ln(x_i / x_min))^-1`, the Pareto maximum-likelihood form.
    ParetoXmin,
}

impl fmt::Display for MatthewVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatthewVariant::LiteralXmax => "literal",
            MatthewVariant::ParetoXmin => "pareto",
        })
    }
}

impl FromStr for MatthewVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" | "literal_xmax" => Ok(MatthewVariant::LiteralXmax),
            "pareto" | "pareto_xmin" => Ok(MatthewVariant::ParetoXmin),
            other => Err(Error::Config(format!("unknown matthew variant {other:?}"))),
        }
    }
}

/// Degree of Matthew Effect over recommendation frequencies. Items with zero
/// frequency are ignored; if every remaining frequency is equal the log sum
/// is zero and the result is `f64::INFINITY`.
pub fn matthew_degree_from_frequencies(frequencies: &[usize], variant: MatthewVariant) -> f64 {
    let present: Vec<f64> = frequencies
        .iter()
        .filter(|&&x| x >= 1)
        .map(|&x| x as f64)
        .collect();
    let reference = match variant {
        MatthewVariant::LiteralXmax => present.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        MatthewVariant::ParetoXmin => present.iter().copied().fold(f64::INFINITY, f64::min),
    };
    let log_sum: f64 = present.iter().map(|x| (x / reference).ln()).sum();
    if log_sum == 0.0 {
        return f64::INFINITY;
    }
    1.0 + present.len() as f64 / log_sum
}

pub fn matthew_degree(lists: &TopKLists, m: usize, variant: MatthewVariant) -> f64 {
    matthew_degree_from_frequencies(&lists.item_frequencies(m), variant)
}

/// Top-K lists for every user, excluding each user's training items.
pub fn recommend<S: Scorer + ?Sized>(
    scorer: &S,
    train: &RatingsDataset,
    k_top: usize,
) -> TopKLists {
    let exclude = train.items_by_user();
    model::top_k(
        train.n(),
        train.m(),
        |i, j| scorer.score(i, j),
        &exclude,
        k_top,
    )
}

/// One row of a benchmark: run labels plus the three metrics, or the error
/// that stopped the run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub algorithm: String,
    pub beta: f64,
    pub k: usize,
    pub epochs: usize,
    pub seed: u64,
    pub k_top: usize,
    pub mae: f64,
    /// `f64::INFINITY` when all recommendation frequencies are equal.
    pub matthew_degree: f64,
    pub position_bias: f64,
    pub test_size: usize,
    pub error: Option<String>,
}

impl MetricsReport {
    /// A row for a run that failed before producing metrics.
    pub fn failed(algorithm: impl Into<String>, beta: f64, error: impl Into<String>) -> Self {
        Self {
            algorithm: algorithm.into(),
            beta,
            k: 0,
            epochs: 0,
            seed: 0,
            k_top: 0,
            mae: f64::NAN,
            matthew_degree: f64::NAN,
            position_bias: f64::NAN,
            test_size: 0,
            error: Some(error.into()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// All three metrics for one scorer. Labels other than the algorithm name
/// are left zero for the caller to fill in.
pub fn evaluate_all<S: Scorer + ?Sized>(
    algorithm: &str,
    scorer: &S,
    train: &RatingsDataset,
    test: &RatingsDataset,
    k_top: usize,
    variant: MatthewVariant,
) -> Result<MetricsReport> {
    let mae = mae(scorer, test)?;
    let position_bias = position_bias_metric(scorer, test, test.m())?;
    let lists = recommend(scorer, train, k_top);
    Ok(MetricsReport {
        algorithm: algorithm.to_owned(),
        beta: 0.0,
        k: 0,
        epochs: 0,
        seed: 0,
        k_top,
        mae,
        matthew_degree: matthew_degree(&lists, train.m(), variant),
        position_bias,
        test_size: test.len(),
        error: None,
    })
}

pub const REPORT_HEADER: [&str; 11] = [
    "algorithm",
    "beta",
    "k",
    "epochs",
    "seed",
    "k_top",
    "mae",
    "matthew_degree",
    "position_bias",
    "test_size",
    "error",
];

/// Formats like C's `%.6g`: six significant digits, trailing zeros dropped,
/// `inf` for infinities.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_reports_csv<W: Write>(reports: &[MetricsReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in reports {
        let metric = |x: f64| {
            if r.is_ok() {
                format_sig6(x)
            } else {
                String::new()
            }
        };
        out.write_record([
            r.algorithm.clone(),
            format_sig6(r.beta),
            r.k.to_string(),
            r.epochs.to_string(),
            r.seed.to_string(),
            r.k_top.to_string(),
            metric(r.mae),
            metric(r.matthew_degree),
            metric(r.position_bias),
            if r.is_ok() {
                r.test_size.to_string()
            } else {
                String::new()
            },
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_reports_csv<R: Read>(r: R) -> Result<Vec<MetricsReport>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(REPORT_HEADER.iter().copied()) {
        return Err(Error::Schema {
            line: 1,
            message: format!("unexpected report header {headers:?}"),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |field: &str| Error::Parse {
            line,
            message: format!("bad {field} value"),
        };
        let num = |idx: usize, field: &str| rec[idx].parse::<f64>().map_err(|_| bad(field));
        let int = |idx: usize, field: &str| rec[idx].parse::<u64>().map_err(|_| bad(field));
        let error = (!rec[10].is_empty()).then(|| rec[10].to_owned());
        let mut report = MetricsReport::failed(&rec[0], num(1, "beta")?, "");
        report.k = int(2, "k")? as usize;
        report.epochs = int(3, "epochs")? as usize;
        report.seed = int(4, "seed")?;
        report.k_top = int(5, "k_top")? as usize;
        report.error = error;
        if report.is_ok() {
            report.mae = num(6, "mae")?;
            report.matthew_degree = num(7, "matthew_degree")?;
            report.position_bias = num(8, "position_bias")?;
            report.test_size = int(9, "test_size")? as usize;
        }
        out.push(report);
    }
    Ok(out)
}
