//! Seeded replicate simulation.
//!
//! Replicate `i` draws from a ChaCha8 generator keyed by `(seed, stream = i)`,
//! so a replicate's random numbers do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec::Exec;

/// Generator for replicate `index` under `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `n` independent replicates of `f`, returning results in index order.
pub fn replicate<T, F>(n: usize, seed: u64, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    exec.map(n, |i| {
        let mut rng = replicate_rng(seed, i as u64);
        f(&mut rng, i)
    })
}

/// Fraction of replicates for which `reject` returns true.
pub fn rejection_rate<F>(n: usize, seed: u64, exec: Exec, reject: F) -> f64
where
    F: Fn(&mut ChaCha8Rng, usize) -> bool + Sync + Send,
{
    if n == 0 {
        return 0.0;
    }
    let hits = replicate(n, seed, exec, reject)
        .into_iter()
        .filter(|&r| r)
        .count();
    hits as f64 / n as f64
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}
