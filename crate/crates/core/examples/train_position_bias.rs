//! Train the position-bias regularized model and print its loss history.
//!
//! ```bash
//! cargo run --release -p posbias --example train_position_bias -- 0.5
//! ```

use posbias::synthetic::{zipf_ratings, SyntheticSpec};
use posbias::trainer::{train, write_history_csv, Algorithm, TrainConfig};

fn main() -> anyhow::Result<()> {
    let beta: f64 = std::env::args().nth(1).map_or(Ok(0.5), |b| b.parse())?;
    let dataset = zipf_ratings(&SyntheticSpec::default())?;
    let config = TrainConfig {
        algorithm: Algorithm::PositionBiasMf,
        beta,
        ..TrainConfig::default()
    };
    let outcome = train(&dataset, &config)?;
    write_history_csv(&outcome.history, std::io::stdout())?;

    let model = &outcome.model;
    let target = 1.0 / dataset.m() as f64;
    let mean_score: f64 = dataset
        .ratings()
        .iter()
        .map(|r| model.predict_cosine(r.user, r.item))
        .sum::<f64>()
        / dataset.len() as f64;
    eprintln!(
        "beta {beta}: mean cosine on training pairs {mean_score:.4} (uniform target {target:.4})"
    );
    Ok(())
}
