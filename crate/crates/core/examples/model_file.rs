//! Save a trained model, inspect the fixed header, and load it back.

use posbias::model::{FactorModel, MAGIC};
use posbias::synthetic::{zipf_ratings, SyntheticSpec};
use posbias::trainer::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let dataset = zipf_ratings(&SyntheticSpec {
        users: 50,
        items: 30,
        ratings_per_user: 10,
        ..SyntheticSpec::default()
    })?;
    let model = train(
        &dataset,
        &TrainConfig {
            k: 8,
            epochs: 5,
            ..TrainConfig::default()
        },
    )?
    .model;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("model.pbmf");
    model.save(&path)?;

    let bytes = std::fs::read(&path)?;
    assert_eq!(&bytes[..4], MAGIC);
    let dim = |off: usize| u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
    println!(
        "{} bytes: version {}, n = {}, m = {}, k = {}, mode byte {}",
        bytes.len(),
        bytes[4],
        dim(5),
        dim(13),
        dim(21),
        bytes[29]
    );

    let restored = FactorModel::load(&path)?;
    assert_eq!(restored, model);
    println!(
        "round trip exact; prediction(0, 0) = {:.6}",
        restored.predict_cosine(0, 0)
    );
    Ok(())
}
