//! Seeded rating data with Zipf-skewed item popularity.
//!
//! Each user draws distinct items from a Zipf law over item ids, so low ids
//! are popular. Ratings come from hidden low-rank factors plus an item bias
//! that grows with popularity, rounded onto the integer 1..=5 scale.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Zipf};

use crate::data::{Rating, RatingsDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub users: usize,
    pub items: usize,
    pub ratings_per_user: usize,
    /// Exponent of the item popularity law.
    pub zipf_exponent: f64,
    pub latent_dim: usize,
    /// Standard deviation of rating noise before rounding.
    pub noise: f64,
    /// Give every item at least one rating so `m == items`.
    pub cover_all_items: bool,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            users: 200,
            items: 100,
            ratings_per_user: 20,
            zipf_exponent: 1.0,
            latent_dim: 4,
            noise: 0.3,
            cover_all_items: false,
            seed: 0,
        }
    }
}

pub fn zipf_ratings(spec: &SyntheticSpec) -> Result<RatingsDataset> {
    if spec.users == 0 || spec.items == 0 || spec.latent_dim == 0 {
        return Err(Error::Config("synthetic dimensions must be >= 1".into()));
    }
    if spec.ratings_per_user == 0 || spec.ratings_per_user > spec.items {
        return Err(Error::Config(format!(
            "ratings_per_user must be in 1..={}, got {}",
            spec.items, spec.ratings_per_user
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let popularity = Zipf::new(spec.items as f64, spec.zipf_exponent)
        .map_err(|e| Error::Config(format!("zipf law: {e}")))?;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let d = spec.latent_dim;
    let user_f: Vec<f64> = (0..spec.users * d)
        .map(|_| normal.sample(&mut rng))
        .collect();
    let item_f: Vec<f64> = (0..spec.items * d)
        .map(|_| normal.sample(&mut rng))
        .collect();
    let scale = 1.0 / (d as f64).sqrt();

    let rate = |user: usize, item: usize, rng: &mut ChaCha8Rng| {
        let affinity: f64 = (0..d)
            .map(|t| user_f[user * d + t] * item_f[item * d + t])
            .sum();
        let bias = 0.6 - 1.2 * (item as f64 / spec.items as f64);
        let raw = 3.2 + bias + affinity * scale + spec.noise * normal.sample(rng);
        raw.round().clamp(1.0, 5.0)
    };

    let mut ratings = Vec::with_capacity(spec.users * spec.ratings_per_user + spec.items);
    let mut taken = vec![false; spec.items];
    for user in 0..spec.users {
        taken.iter_mut().for_each(|t| *t = false);
        let mut chosen = Vec::with_capacity(spec.ratings_per_user + 1);
        if spec.cover_all_items {
            // Items user, user + users, ... so every item lands somewhere.
            let mut item = user;
            while item < spec.items {
                taken[item] = true;
                chosen.push(item);
                item += spec.users;
            }
        }
        let mut attempts = 0;
        while chosen.len() < spec.ratings_per_user {
            let item = if attempts < 50 * spec.ratings_per_user {
                popularity.sample(&mut rng) as usize - 1
            } else {
                rng.random_range(0..spec.items)
            };
            attempts += 1;
            if !taken[item] {
                taken[item] = true;
                chosen.push(item);
            }
        }
        for item in chosen {
            let value = rate(user, item, &mut rng);
            ratings.push(Rating { user, item, value });
        }
    }
    RatingsDataset::from_indexed(spec.users, spec.items, ratings)
}

/// Writes `dataset` as MovieLens `UserID::MovieID::Rating::Timestamp` lines
/// with 1-based ids taken from the dense indices.
pub fn write_movielens<W: Write>(dataset: &RatingsDataset, mut w: W) -> Result<()> {
    for (t, r) in dataset.ratings().iter().enumerate() {
        writeln!(
            w,
            "{}::{}::{}::{}",
            r.user + 1,
            r.item + 1,
            r.value,
            978_300_000 + t as u64
        )?;
    }
    Ok(())
}
