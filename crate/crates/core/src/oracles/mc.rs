//! Monte Carlo twins of the closed-form oracles.
//!
//! Samples are drawn in fixed-size chunks, each from its own derived stream,
//! so the estimate depends only on `(samples, seed)` and not on the number
//! of worker threads.

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed;

pub const CHUNK: usize = 1 << 16;

/// Sample mean with its standard error `sd/√samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// `|value − mean| ≤ radius · stderr`.
    pub fn covers(&self, value: f64, radius: f64) -> bool {
        (value - self.mean).abs() <= radius * self.stderr
    }

    fn from_count(hits: u64, samples: usize, seed: u64) -> Self {
        let n = samples as f64;
        let p = hits as f64 / n;
        let var = p * (1.0 - p) * n / (n - 1.0);
        MCEstimate {
            mean: p,
            stderr: (var / n).sqrt(),
            samples,
            seed,
        }
    }
}

/// Estimates `P(event(w))` for `w ~ N(0, I_D)`.
pub(crate) fn bernoulli<const D: usize, F>(samples: usize, seed: u64, event: F) -> MCEstimate
where
    F: Fn(&[f64; D]) -> bool + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let counts: Vec<u64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::rng(seed::derive_indexed(seed, "mc", c as u64));
            let len = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0u64;
            let mut w = [0.0; D];
            for _ in 0..len {
                for v in w.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                hits += u64::from(event(&w));
            }
            hits
        })
        .collect();
    MCEstimate::from_count(counts.iter().sum(), samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_plane() {
        let est = bernoulli::<2, _>(200_000, 3, |w| w[0] >= 0.0);
        assert!(est.covers(0.5, 4.0));
        assert!((est.stderr - (0.25f64 / 200_000.0).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn chunking_is_reproducible() {
        let a = bernoulli::<2, _>(CHUNK * 3 + 17, 11, |w| w[0] > w[1]);
        let b = bernoulli::<2, _>(CHUNK * 3 + 17, 11, |w| w[0] > w[1]);
        assert_eq!(a, b);
    }
}
