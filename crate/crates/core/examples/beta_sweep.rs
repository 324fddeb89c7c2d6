//! Sweep the penalty weight and watch position bias trade against accuracy.
//!
//! Pass a MovieLens `ratings.dat` to sweep on real data.

use posbias::data::load_movielens;
use posbias::experiment::{run_sweep, ExperimentConfig};
use posbias::synthetic::{zipf_ratings, SyntheticSpec};

fn main() -> anyhow::Result<()> {
    let dataset = match std::env::args().nth(1) {
        Some(path) => load_movielens(path)?.0,
        None => zipf_ratings(&SyntheticSpec::default())?,
    };
    let mut config = ExperimentConfig::default();
    config.set("beta", "0,0.05,0.1,0.25,0.5,1,2")?;
    config.set("epochs", "20")?;

    println!(
        "{:>6}  {:>10}  {:>8}  {:>14}",
        "beta", "pos. bias", "MAE", "Matthew degree"
    );
    for row in run_sweep(&config, &dataset)? {
        match &row.error {
            None => println!(
                "{:>6}  {:>10.5}  {:>8.4}  {:>14.4}",
                row.beta, row.position_bias, row.mae, row.matthew_degree
            ),
            Some(e) => println!("{:>6}  failed: {e}", row.beta),
        }
    }
    Ok(())
}
