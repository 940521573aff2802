//! Seeded, counter-based random streams.
//!
//! Every trajectory draws from its own ChaCha8 stream selected by
//! `(base_seed, index)`, so ensembles give identical results under any
//! parallel schedule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type StreamRng = ChaCha8Rng;

/// Stream 0 of the generator keyed by `seed`.
pub fn stream(seed: u64) -> StreamRng {
    substream(seed, 0)
}

/// Independent substream `index` of the generator keyed by `base_seed`.
pub fn substream(base_seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Draws an index with probability proportional to `weights` (assumed to sum to ~1).
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap at the top; take the last nonzero weight.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}
