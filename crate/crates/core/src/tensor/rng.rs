//! Deterministic, splittable random streams.
//!
//! Every consumer of randomness derives a fresh generator from
//! (base seed, site label, step counter). Streams are independent of
//! draw order elsewhere in the program and need no saved state: resuming
//! at step k reproduces exactly the stream a straight run would use.

use super::Real;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Root of all randomness for one run.
#[derive(Clone, Copy, Debug)]
pub struct StreamRng {
    seed: u64,
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        StreamRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator for the stream named `site` at counter `step`.
    pub fn stream(&self, site: &str, step: u64) -> ChaCha8Rng {
        let mut state = self
            .seed
            .wrapping_mul(0x9e3779b97f4a7c15)
            ^ fnv1a(site.as_bytes()).rotate_left(17)
            ^ step.wrapping_mul(0xd1342543de82ef95);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }

    /// Derives a child root, for nesting run-level namespaces.
    pub fn child(&self, site: &str) -> StreamRng {
        let mut state = self.seed ^ fnv1a(site.as_bytes());
        StreamRng {
            seed: splitmix64(&mut state),
        }
    }
}

/// `n` standard normal draws.
pub fn sample_normal_vec<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<T> {
    (0..n)
        .map(|_| {
            let v: f64 = StandardNormal.sample(rng);
            T::from_f64(v)
        })
        .collect()
}

/// `n` uniform draws from [lo, hi).
pub fn sample_uniform_vec<T: Real>(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<T> {
    (0..n)
        .map(|_| {
            let v: f64 = rng.random();
            T::from_f64(lo + v * (hi - lo))
        })
        .collect()
}
