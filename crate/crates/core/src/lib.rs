//! Matrix factorization recommenders with a position-bias regularizer.
//!
//! The crate trains cosine-normalized factor models whose loss adds a
//! penalty pulling every normalized score toward the uniform click
//! probability `1/m`, and ships the pieces needed to compare that model
//! against classic matrix factorization and two non-learned placement
//! heuristics:
//!
//! - [`data`]: MovieLens / CSV loaders, dense indexing, seeded holdout splits.
//! - [`model`]: factor matrices, dot and cosine predictions, top-K lists, model files.
//! - [`trainer`]: per-sample losses, analytic gradients and the SGD loop.
//! - [`baselines`]: Random Placement and Zipf Placement scorers.
//! - [`evaluation`]: MAE, Degree of Matthew Effect and the Position Bias Metric.
//! - [`experiment`]: benchmark / sweep drivers and the CSV report format.
//! - [`synthetic`]: seeded generators for Zipf-skewed rating data.
//!
//! Runnable walkthroughs live in `examples/`; the `posbias` binary wraps
//! [`experiment`] for command-line use.

pub mod baselines;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod model;
pub mod synthetic;
pub mod trainer;

pub use baselines::BaselineScorer;
pub use data::{LoadReport, RatingsDataset, SplitSpec};
pub use error::{Error, Result};
pub use evaluation::{MatthewVariant, MetricsReport, Scorer};
pub use model::{FactorModel, PredictionMode, TopKLists};
pub use trainer::{Algorithm, TrainConfig};
