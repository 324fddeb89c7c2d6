//! Random Placement and Zipf Placement: non-learned scorers for comparison.

use crate::data::RatingsDataset;
use crate::evaluation::Scorer;

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineScorer {
    /// Uniform `[0, 1]` score per `(user, item)`, a pure function of the seed.
    Random { seed: u64, r_max: f64 },
    /// `1 / popularity_rank(item)` for every user.
    Zipf { ranks: Vec<usize>, r_max: f64 },
}

impl BaselineScorer {
    pub fn random(seed: u64, r_max: f64) -> Self {
        BaselineScorer::Random { seed, r_max }
    }

    /// Ranks items by training interaction count, most rated first; equal
    /// counts go to the smaller index. Ranks start at 1.
    pub fn zipf(train: &RatingsDataset) -> Self {
        BaselineScorer::Zipf {
            ranks: popularity_ranks(&train.item_counts()),
            r_max: train.r_max(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BaselineScorer::Random { .. } => "random",
            BaselineScorer::Zipf { .. } => "zipf",
        }
    }

    /// Score in `[0, 1]`.
    pub fn unit_score(&self, user: usize, item: usize) -> f64 {
        match self {
            BaselineScorer::Random { seed, .. } => random_unit(*seed, user as u64, item as u64),
            BaselineScorer::Zipf { ranks, .. } => 1.0 / ranks[item] as f64,
        }
    }

    fn scale(&self) -> f64 {
        match self {
            BaselineScorer::Random { r_max, .. } | BaselineScorer::Zipf { r_max, .. } => *r_max,
        }
    }
}

impl Scorer for BaselineScorer {
    fn score(&self, user: usize, item: usize) -> f64 {
        self.unit_score(user, item)
    }

    fn predicted_rating(&self, user: usize, item: usize) -> f64 {
        self.unit_score(user, item) * self.scale()
    }

    fn normalized_score(&self, user: usize, item: usize) -> f64 {
        self.unit_score(user, item)
    }
}

/// Rank (1-based) of each item when sorted by descending count, ties by index.
pub fn popularity_ranks(counts: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; counts.len()];
    for (pos, item) in order.into_iter().enumerate() {
        ranks[item] = pos + 1;
    }
    ranks
}

// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based uniform draw on `[0, 1)` keyed by `(seed, user, item)`.
fn random_unit(seed: u64, user: u64, item: u64) -> f64 {
    let h = mix(mix(mix(seed) ^ user) ^ item);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
