//! Seeded random streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type SimRng = ChaCha8Rng;

/// Independent stream `index` under `master`; identical inputs give identical draws.
pub fn seed_stream(master: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Index drawn from a probability vector. Mass is assumed to sum to 1; any
/// rounding shortfall falls on the last positive entry.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> Result<usize> {
    let last = probs
        .iter()
        .rposition(|&p| p > 0.0)
        .ok_or_else(|| Error::InvalidValue("categorical distribution has no mass".into()))?;
    let x: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    for (k, &p) in probs[..last].iter().enumerate() {
        acc += p;
        if x < acc {
            return Ok(k);
        }
    }
    Ok(last)
}
