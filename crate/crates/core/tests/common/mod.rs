//! Independent oracles shared by the integration tests. Nothing here calls
//! into the trainer's loss or gradient code.
#![allow(dead_code)]

use posbias::data::{Rating, RatingsDataset};
use posbias::FactorModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Textbook cosine, written out longhand.
pub fn cosine_oracle(u: &[f64], v: &[f64]) -> f64 {
    let mut uv = 0.0;
    let mut uu = 0.0;
    let mut vv = 0.0;
    for t in 0..u.len() {
        uv += u[t] * v[t];
        uu += u[t] * u[t];
        vv += v[t] * v[t];
    }
    uv / (uu.sqrt() * vv.sqrt())
}

pub fn position_bias_loss_oracle(
    u: &[f64],
    v: &[f64],
    r: f64,
    r_max: f64,
    m: usize,
    beta: f64,
) -> f64 {
    let c = cosine_oracle(u, v);
    (r / r_max - c).powi(2) + beta * (c - 1.0 / m as f64).powi(2)
}

pub fn classic_loss_oracle(u: &[f64], v: &[f64], r: f64) -> f64 {
    let p: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (r - p).powi(2)
}

/// Central differences of `f` at `x`, one coordinate at a time.
pub fn central_difference(x: &[f64], step: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|t| {
            let orig = probe[t];
            probe[t] = orig + step;
            let up = f(&probe);
            probe[t] = orig - step;
            let down = f(&probe);
            probe[t] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

/// Dense n x m rating table with `None` for unrated cells.
pub fn dense(ds: &RatingsDataset) -> Vec<Vec<Option<f64>>> {
    let mut table = vec![vec![None; ds.m()]; ds.n()];
    for r in ds.ratings() {
        table[r.user][r.item] = Some(r.value);
    }
    table
}

/// Double loop over every (user, item) cell of the rating matrix.
pub fn full_loss_oracle(model: &FactorModel, ds: &RatingsDataset, beta: f64) -> f64 {
    let table = dense(ds);
    let mut total = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            if let Some(r) = cell {
                total += position_bias_loss_oracle(
                    model.user(i),
                    model.item(j),
                    *r,
                    ds.r_max(),
                    ds.m(),
                    beta,
                );
            }
        }
    }
    total
}

/// 5 users x 7 items, 20 distinct ratings, integer scale 1..=5.
pub fn desk_dataset() -> RatingsDataset {
    let mut rng = rng(5720);
    let mut cells: Vec<(usize, usize)> = (0..5).flat_map(|i| (0..7).map(move |j| (i, j))).collect();
    // Fisher-Yates on the first 20 positions.
    for t in 0..20 {
        let s = rng.random_range(t..cells.len());
        cells.swap(t, s);
    }
    let ratings = cells[..20]
        .iter()
        .map(|&(user, item)| Rating {
            user,
            item,
            value: rng.random_range(1..=5) as f64,
        })
        .collect();
    RatingsDataset::from_indexed(5, 7, ratings).unwrap()
}

/// Random integer-rated dataset with `count` distinct cells.
pub fn random_dataset(n: usize, m: usize, count: usize, seed: u64) -> RatingsDataset {
    let mut rng = rng(seed);
    let mut seen = std::collections::HashSet::new();
    let mut ratings = Vec::with_capacity(count);
    while ratings.len() < count {
        let (user, item) = (rng.random_range(0..n), rng.random_range(0..m));
        if seen.insert((user, item)) {
            ratings.push(Rating {
                user,
                item,
                value: rng.random_range(1..=5) as f64,
            });
        }
    }
    RatingsDataset::from_indexed(n, m, ratings).unwrap()
}
