//! Load a MovieLens `ratings.dat` (or a generated stand-in) and split it.
//!
//! ```bash
//! cargo run -p posbias --example load_and_split -- path/to/ratings.dat
//! ```

use posbias::data::{load_movielens, read_movielens, SplitSpec};
use posbias::synthetic::{write_movielens, zipf_ratings, SyntheticSpec};

fn main() -> anyhow::Result<()> {
    let (dataset, report) = match std::env::args().nth(1) {
        Some(path) => load_movielens(path)?,
        None => {
            let mut buf = Vec::new();
            write_movielens(&zipf_ratings(&SyntheticSpec::default())?, &mut buf)?;
            read_movielens(buf.as_slice())?
        }
    };
    println!(
        "{} interactions, n = {} users, m = {} items, ratings in [{}, {}]",
        dataset.len(),
        dataset.n(),
        dataset.m(),
        dataset.r_min(),
        dataset.r_max()
    );
    println!(
        "{} lines read, {} malformed, {} duplicates dropped",
        report.lines_read, report.malformed_lines, report.duplicates_dropped
    );

    let split = dataset.split(&SplitSpec::default())?;
    println!(
        "train {} / test {} ({} test rows dropped for unseen users or items)",
        split.train.len(),
        split.test.len(),
        split.dropped
    );
    // Splits share the parent's index space and scale.
    assert_eq!(split.test.r_max(), dataset.r_max());
    Ok(())
}
