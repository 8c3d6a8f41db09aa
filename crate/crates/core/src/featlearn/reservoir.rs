use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Single-pass uniform sampling without replacement (Algorithm R).
pub struct Reservoir<T> {
    capacity: usize,
    seen: u64,
    items: Vec<T>,
    rng: ChaCha8Rng,
}

impl<T> Reservoir<T> {
    pub fn new(capacity: usize, seed: u64) -> Self {
        Reservoir {
            capacity,
            seen: 0,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn offer(&mut self, item: T) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            let j = self.rng.gen_range(0..=self.seen);
            if (j as usize) < self.capacity {
                self.items[j as usize] = item;
            }
        }
        self.seen += 1;
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// The sample in shuffled order.
    pub fn finish(mut self) -> Result<Vec<T>> {
        if self.seen == 0 {
            return Err(Error::Empty("reservoir sampling over an empty stream".into()));
        }
        self.items.shuffle(&mut self.rng);
        Ok(self.items)
    }
}

pub fn reservoir_sample<T, I>(items: I, n: usize, seed: u64) -> Result<Vec<T>>
where
    I: IntoIterator<Item = T>,
{
    if n == 0 {
        return Err(Error::Config("reservoir size must be at least 1".into()));
    }
    let mut r = Reservoir::new(n, seed);
    for item in items {
        r.offer(item);
    }
    r.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exhaustive_sample_is_a_permutation() {
        let s = reservoir_sample(0..10, 10, 3).unwrap();
        let mut sorted = s.clone();
        sorted.sort();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
        assert_ne!(s, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn short_stream_returns_everything() {
        assert_eq!(reservoir_sample(0..3, 10, 1).unwrap().len(), 3);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = reservoir_sample(0..10_000, 50, 9).unwrap();
        let b = reservoir_sample(0..10_000, 50, 9).unwrap();
        let c = reservoir_sample(0..10_000, 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn empty_stream_is_error() {
        assert!(matches!(reservoir_sample(std::iter::empty::<u8>(), 4, 0), Err(Error::Empty(_))));
        assert!(reservoir_sample(0..4, 0, 0).is_err());
    }

    #[test]
    fn inclusion_frequency_is_uniform() {
        // 100k items, n = 1000, 500 repetitions: each item is included with
        // p = 0.01, so its count is Binomial(500, 0.01) with mean 5 and
        // sd ~2.22. Check (a) per-decile mean counts within 3 sigma of the
        // decile mean and (b) the overall variance matches the binomial.
        let (items, n, reps) = (100_000usize, 1000usize, 500u64);
        let mut counts = vec![0u32; items];
        for rep in 0..reps {
            for i in reservoir_sample(0..items, n, 1000 + rep).unwrap() {
                counts[i] += 1;
            }
        }
        let p = n as f64 / items as f64;
        let mean = reps as f64 * p;
        let var = reps as f64 * p * (1.0 - p);
        for decile in counts.chunks(items / 10) {
            let m = decile.iter().map(|&c| c as f64).sum::<f64>() / decile.len() as f64;
            let sigma = (var / decile.len() as f64).sqrt();
            assert!((m - mean).abs() < 3.0 * sigma, "decile mean {m}");
        }
        let observed_var =
            counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / items as f64;
        assert!((observed_var / var - 1.0).abs() < 0.05, "variance ratio {}", observed_var / var);
    }
}
