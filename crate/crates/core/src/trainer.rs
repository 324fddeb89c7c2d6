//! Losses, analytic gradients and the per-sample SGD loop.
//!
//! Three objectives share one loop:
//!
//! - `classic_mf`: `sum (r - u.v)^2` on the raw rating scale.
//! - `cosine_mf`: `sum (r/r_max - c)^2` with `c = cos(u, v)`.
//! - `position_bias_mf`: the cosine fit plus `beta * sum (c - 1/m)^2`, a
//!   per-sample pull of every normalized score toward the uniform click
//!   probability over `m` items.
//!
//! `cosine_mf` runs through exactly the same code as `position_bias_mf` with
//! `beta` forced to zero, so the two are bit-identical at `beta = 0`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::RatingsDataset;
use crate::error::{Error, Result};
use crate::model::{self, FactorModel, PredictionMode, DEFAULT_NORM_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    ClassicMf,
    CosineMf,
    PositionBiasMf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [
        Algorithm::ClassicMf,
        Algorithm::CosineMf,
        Algorithm::PositionBiasMf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ClassicMf => "classic_mf",
            Algorithm::CosineMf => "cosine_mf",
            Algorithm::PositionBiasMf => "position_bias_mf",
        }
    }

    pub fn mode(self) -> PredictionMode {
        match self {
            Algorithm::ClassicMf => PredictionMode::Dot,
            Algorithm::CosineMf | Algorithm::PositionBiasMf => PredictionMode::Cosine,
        }
    }

    /// Penalty weight the algorithm actually applies for a configured `beta`.
    pub fn effective_beta(self, beta: f64) -> f64 {
        match self {
            Algorithm::PositionBiasMf => beta,
            Algorithm::ClassicMf | Algorithm::CosineMf => 0.0,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    pub learning_rate: f64,
    /// Penalty weight; only `position_bias_mf` uses it.
    pub beta: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
    pub norm_epsilon: f64,
    pub shuffle_each_epoch: bool,
    pub algorithm: Algorithm,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 32,
            learning_rate: 0.01,
            beta: 0.0,
            epochs: 20,
            seed: 42,
            init_scale: 0.1,
            norm_epsilon: DEFAULT_NORM_EPSILON,
            shuffle_each_epoch: true,
            algorithm: Algorithm::PositionBiasMf,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.k == 0 {
            return bad("k must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be >= 0, got {}", self.beta));
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1".into());
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return bad(format!("init_scale must be > 0, got {}", self.init_scale));
        }
        if self.norm_epsilon.is_nan() || self.norm_epsilon <= 0.0 {
            return bad(format!(
                "norm_epsilon must be > 0, got {}",
                self.norm_epsilon
            ));
        }
        Ok(())
    }
}

/// Fit and penalty parts of a loss. `total = fit_term + beta * penalty_term`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SampleLossBreakdown {
    pub fit_term: f64,
    pub penalty_term: f64,
    pub total: f64,
}

/// The regularized cosine objective for one dataset: rating scale, item
/// count and penalty weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyObjective {
    pub r_max: f64,
    pub target: f64,
    pub beta: f64,
    pub norm_epsilon: f64,
}

impl PenaltyObjective {
    pub fn new(r_max: f64, m: usize, beta: f64) -> Self {
        Self {
            r_max,
            target: 1.0 / m as f64,
            beta,
            norm_epsilon: DEFAULT_NORM_EPSILON,
        }
    }

    pub fn with_norm_epsilon(mut self, epsilon: f64) -> Self {
        self.norm_epsilon = epsilon;
        self
    }

    pub fn loss(&self, u: &[f64], v: &[f64], r: f64) -> SampleLossBreakdown {
        let c = model::cosine(u, v, self.norm_epsilon);
        let fit = (r / self.r_max - c).powi(2);
        let penalty = (c - self.target).powi(2);
        SampleLossBreakdown {
            fit_term: fit,
            penalty_term: penalty,
            total: fit + self.beta * penalty,
        }
    }

    /// Writes `dL/du` and `dL/dv` for one sample into `grad_u` / `grad_v`.
    ///
    /// With `g = -2(r/r_max - c) + 2 beta (c - 1/m)` the chain rule through
    /// the cosine gives `g * (v/(|u||v|) - c u/|u|^2)` and its mirror for `v`.
    /// When the norm product falls under `norm_epsilon` the denominator is a
    /// constant and the cosine is just `u.v / epsilon`.
    pub fn gradients(&self, u: &[f64], v: &[f64], r: f64, grad_u: &mut [f64], grad_v: &mut [f64]) {
        let nu2 = model::dot(u, u);
        let nv2 = model::dot(v, v);
        let norms = (nu2 * nv2).sqrt();
        let uv = model::dot(u, v);
        let clamped = norms <= self.norm_epsilon;
        let denom = if clamped { self.norm_epsilon } else { norms };
        let c = uv / denom;
        let g = -2.0 * (r / self.r_max - c) + 2.0 * self.beta * (c - self.target);
        if clamped {
            for ((gu, gv), (&ui, &vi)) in grad_u
                .iter_mut()
                .zip(grad_v.iter_mut())
                .zip(u.iter().zip(v))
            {
                *gu = g * vi / denom;
                *gv = g * ui / denom;
            }
            return;
        }
        let cu = c / nu2;
        let cv = c / nv2;
        for ((gu, gv), (&ui, &vi)) in grad_u
            .iter_mut()
            .zip(grad_v.iter_mut())
            .zip(u.iter().zip(v))
        {
            *gu = g * (vi / denom - cu * ui);
            *gv = g * (ui / denom - cv * vi);
        }
    }
}

/// Per-sample regularized cosine loss.
pub fn sample_loss(
    u: &[f64],
    v: &[f64],
    r: f64,
    r_max: f64,
    m: usize,
    beta: f64,
) -> SampleLossBreakdown {
    PenaltyObjective::new(r_max, m, beta).loss(u, v, r)
}

/// Per-sample gradients of [`sample_loss`] with respect to `u` and `v`.
pub fn sample_gradients(
    u: &[f64],
    v: &[f64],
    r: f64,
    r_max: f64,
    m: usize,
    beta: f64,
) -> (Vec<f64>, Vec<f64>) {
    let mut gu = vec![0.0; u.len()];
    let mut gv = vec![0.0; v.len()];
    PenaltyObjective::new(r_max, m, beta).gradients(u, v, r, &mut gu, &mut gv);
    (gu, gv)
}

/// Squared error of the raw inner product, `(r - u.v)^2`.
pub fn classic_sample_loss(u: &[f64], v: &[f64], r: f64) -> f64 {
    (r - model::dot(u, v)).powi(2)
}

pub fn classic_sample_gradients(u: &[f64], v: &[f64], r: f64) -> (Vec<f64>, Vec<f64>) {
    let mut gu = vec![0.0; u.len()];
    let mut gv = vec![0.0; v.len()];
    classic_gradients_into(u, v, r, &mut gu, &mut gv);
    (gu, gv)
}

fn classic_gradients_into(u: &[f64], v: &[f64], r: f64, grad_u: &mut [f64], grad_v: &mut [f64]) {
    let e = -2.0 * (r - model::dot(u, v));
    for ((gu, gv), (&ui, &vi)) in grad_u
        .iter_mut()
        .zip(grad_v.iter_mut())
        .zip(u.iter().zip(v))
    {
        *gu = e * vi;
        *gv = e * ui;
    }
}

/// Full-dataset loss after one epoch. Epoch 0 is the freshly initialized model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub fit: f64,
    pub penalty: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: FactorModel,
    pub history: Vec<EpochLoss>,
}

impl TrainOutcome {
    pub fn final_loss(&self) -> EpochLoss {
        *self.history.last().expect("history always holds epoch 0")
    }
}

/// Loss of `model` over every interaction in `dataset` under `algorithm`.
///
/// For the cosine objectives the penalty sum is reported even when the
/// algorithm ignores it; `total` uses the algorithm's effective beta.
pub fn full_loss(
    model: &FactorModel,
    dataset: &RatingsDataset,
    algorithm: Algorithm,
    beta: f64,
) -> SampleLossBreakdown {
    let mut fit = 0.0;
    let mut penalty = 0.0;
    match algorithm {
        Algorithm::ClassicMf => {
            for r in dataset.ratings() {
                fit += classic_sample_loss(model.user(r.user), model.item(r.item), r.value);
            }
        }
        Algorithm::CosineMf | Algorithm::PositionBiasMf => {
            let objective = PenaltyObjective::new(dataset.r_max(), dataset.m(), 0.0)
                .with_norm_epsilon(model.norm_epsilon());
            for r in dataset.ratings() {
                let s = objective.loss(model.user(r.user), model.item(r.item), r.value);
                fit += s.fit_term;
                penalty += s.penalty_term;
            }
        }
    }
    SampleLossBreakdown {
        fit_term: fit,
        penalty_term: penalty,
        total: fit + algorithm.effective_beta(beta) * penalty,
    }
}

/// Trains a factor model with per-sample SGD.
///
/// Each epoch visits every interaction once, in a seeded permutation when
/// `shuffle_each_epoch` is set. Both gradients are evaluated at the
/// pre-update `U_i` and `V_j` before either row is written. The run is
/// bit-deterministic for a given dataset and config.
pub fn train(dataset: &RatingsDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let algorithm = config.algorithm;
    let beta = algorithm.effective_beta(config.beta);
    let mut model = FactorModel::init(
        dataset.n(),
        dataset.m(),
        config.k,
        config.seed,
        config.init_scale,
    )?
    .with_mode(algorithm.mode())
    .with_r_max(dataset.r_max())
    .with_norm_epsilon(config.norm_epsilon);
    let objective = PenaltyObjective::new(dataset.r_max(), dataset.m(), beta)
        .with_norm_epsilon(config.norm_epsilon);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut grad_u = vec![0.0; config.k];
    let mut grad_v = vec![0.0; config.k];
    let lr = config.learning_rate;

    let record = |model: &FactorModel, epoch: usize| -> Result<EpochLoss> {
        let loss = full_loss(model, dataset, algorithm, beta);
        if !loss.total.is_finite() {
            return Err(Error::Divergence {
                epoch,
                learning_rate: lr,
            });
        }
        Ok(EpochLoss {
            epoch,
            fit: loss.fit_term,
            penalty: loss.penalty_term,
            total: loss.total,
        })
    };

    let mut history = Vec::with_capacity(config.epochs + 1);
    history.push(record(&model, 0)?);
    for epoch in 1..=config.epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        for &idx in &order {
            let r = dataset.ratings()[idx];
            let (u, v) = model.rows_mut(r.user, r.item);
            match algorithm {
                Algorithm::ClassicMf => {
                    classic_gradients_into(u, v, r.value, &mut grad_u, &mut grad_v)
                }
                Algorithm::CosineMf | Algorithm::PositionBiasMf => {
                    objective.gradients(u, v, r.value, &mut grad_u, &mut grad_v)
                }
            }
            for (x, g) in u.iter_mut().zip(&grad_u) {
                *x -= lr * g;
            }
            for (x, g) in v.iter_mut().zip(&grad_v) {
                *x -= lr * g;
            }
        }
        history.push(record(&model, epoch)?);
    }
    Ok(TrainOutcome { model, history })
}

/// Writes `epoch,fit_loss,penalty_loss,total_loss` rows.
pub fn write_history_csv<W: Write>(history: &[EpochLoss], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epoch", "fit_loss", "penalty_loss", "total_loss"])?;
    for h in history {
        out.write_record([
            h.epoch.to_string(),
            h.fit.to_string(),
            h.penalty.to_string(),
            h.total.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
