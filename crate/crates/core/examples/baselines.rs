//! Random Placement and Zipf Placement scorers.

use posbias::evaluation::Scorer;
use posbias::synthetic::{zipf_ratings, SyntheticSpec};
use posbias::BaselineScorer;

fn main() -> anyhow::Result<()> {
    let train = zipf_ratings(&SyntheticSpec::default())?;

    let zipf = BaselineScorer::zipf(&train);
    let counts = train.item_counts();
    let mut by_rank: Vec<usize> = (0..train.m()).collect();
    by_rank.sort_by(|&a, &b| zipf.score(0, b).total_cmp(&zipf.score(0, a)));
    println!("zipf placement, five most popular items:");
    for &item in &by_rank[..5] {
        println!(
            "  item {item:>3}: {} ratings, score {:.3}, predicted rating {:.2}",
            counts[item],
            zipf.score(0, item),
            zipf.predicted_rating(0, item)
        );
    }

    let random = BaselineScorer::random(42, train.r_max());
    println!("random placement for user 0:");
    for item in 0..5 {
        // Counter-based: asking twice gives the same value.
        assert_eq!(random.score(0, item), random.score(0, item));
        println!("  item {item}: score {:.3}", random.score(0, item));
    }
    Ok(())
}
