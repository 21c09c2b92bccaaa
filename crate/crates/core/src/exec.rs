//! Deterministic chunked execution.
//!
//! Every Monte Carlo loop in the crate is split into fixed-size chunks. Chunk
//! `i` draws from its own ChaCha stream and the per-chunk results are reduced
//! in chunk order, so the outcome does not depend on how many workers ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Estimate;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Map `f` over `0..n` and return results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel => par_map(n, f),
        }
    }

    /// Fallible variant of [`Execution::map`]; the first error in index order wins.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Independent stream for one chunk of one task.
pub fn chunk_rng(seed: u64, task: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ task.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(chunk);
    rng
}

/// Stable 64-bit tag for a task name (FNV-1a).
pub fn task_tag(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Split `total` items into chunks of at most `chunk` items.
pub fn chunk_sizes(total: usize, chunk: usize) -> Vec<usize> {
    let chunk = chunk.max(1);
    let mut out = vec![chunk; total / chunk];
    if total % chunk != 0 {
        out.push(total % chunk);
    }
    out
}

/// Pairwise summation; order-fixed, so results are reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Draws per chunk in [`mc_mean`].
pub const MC_CHUNK: usize = 1024;

/// Plain Monte Carlo mean of `f` over `samples` draws with its standard error.
/// Chunk `i` uses `chunk_rng(seed, task, i)`.
pub fn mc_mean<F>(exec: Execution, samples: usize, seed: u64, task: u64, f: F) -> crate::Result<Estimate>
where
    F: Fn(&mut ChaCha8Rng) -> crate::Result<f64> + Sync + Send,
{
    let sizes = chunk_sizes(samples, MC_CHUNK);
    let parts = exec.try_map(sizes.len(), |c| -> crate::Result<(f64, f64)> {
        let mut rng = chunk_rng(seed, task, c as u64);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..sizes[c] {
            let y = f(&mut rng)?;
            s += y;
            s2 += y * y;
        }
        Ok((s, s2))
    })?;
    let n = samples.max(1) as f64;
    let sum: f64 = parts.iter().map(|p| p.0).sum();
    let sum2: f64 = parts.iter().map(|p| p.1).sum();
    let mean = sum / n;
    let var = ((sum2 / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
    Ok(Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn chunks_cover_total() {
        assert_eq!(chunk_sizes(10, 4), vec![4, 4, 2]);
        assert_eq!(chunk_sizes(8, 4), vec![4, 4]);
        assert!(chunk_sizes(0, 4).is_empty());
    }

    #[test]
    fn streams_differ_and_repeat() {
        let a: f64 = chunk_rng(1, 2, 3).random();
        let b: f64 = chunk_rng(1, 2, 3).random();
        let c: f64 = chunk_rng(1, 2, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let f = |i: usize| {
            let mut rng = chunk_rng(7, 0, i as u64);
            (0..100).map(|_| rng.random::<f64>()).sum::<f64>()
        };
        let a = Execution::Sequential.map(37, f);
        let b = Execution::Parallel.map(37, f);
        assert_eq!(pairwise_sum(&a).to_bits(), pairwise_sum(&b).to_bits());
    }
}
