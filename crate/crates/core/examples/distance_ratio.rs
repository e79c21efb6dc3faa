//! Histogram of sampled image distance ratios against the quadratic density.

use fram_rir::fram::{distance_ratio_quantile, rescale_distance_ratio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn main() {
    let (alpha, beta) = (0.1, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 100_000;
    let bins = 9;
    let mut hist = vec![0usize; bins];
    for _ in 0..n {
        let x = distance_ratio_quantile(1.0 - rng.random::<f64>(), alpha, beta);
        let b = (((x - alpha) / (beta - alpha)) * bins as f64) as usize;
        hist[b.min(bins - 1)] += 1;
    }
    let width = (beta - alpha) / bins as f64;
    for (b, count) in hist.iter().enumerate() {
        let (lo, hi) = (alpha + b as f64 * width, alpha + (b + 1) as f64 * width);
        let expected = (hi.powi(3) - lo.powi(3)) / (beta.powi(3) - alpha.powi(3));
        println!(
            "[{lo:.1}, {hi:.1})  sampled {:.4}  density {expected:.4}",
            *count as f64 / n as f64
        );
    }
    let max_ratio = 343.0 * 0.5 / 1.5;
    println!(
        "rescaled onto [1, {max_ratio:.1}]: alpha -> {:.1}, beta -> {:.1}",
        rescale_distance_ratio(alpha, alpha, beta, max_ratio),
        rescale_distance_ratio(beta, alpha, beta, max_ratio)
    );
}
