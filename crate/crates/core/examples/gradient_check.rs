//! Compare analytic per-sample gradients with central finite differences.

use posbias::trainer::{sample_gradients, sample_loss};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let k = 8;
    let (r, r_max, m, beta) = (3.0, 5.0, 100, 0.2);
    let step = 1e-6;
    for trial in 0..5 {
        let u: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (grad_u, _) = sample_gradients(&u, &v, r, r_max, m, beta);
        let mut worst: f64 = 0.0;
        for t in 0..k {
            let mut up = u.clone();
            let mut down = u.clone();
            up[t] += step;
            down[t] -= step;
            let numeric = (sample_loss(&up, &v, r, r_max, m, beta).total
                - sample_loss(&down, &v, r, r_max, m, beta).total)
                / (2.0 * step);
            worst = worst.max((numeric - grad_u[t]).abs());
        }
        let radial: f64 = grad_u.iter().zip(&u).map(|(g, x)| g * x).sum();
        println!(
            "trial {trial}: max |analytic - numeric| = {worst:.2e}, grad_u . u = {radial:.1e}"
        );
    }
}
