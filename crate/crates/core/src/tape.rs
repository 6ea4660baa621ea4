//! Keyed deterministic randomness.
//!
//! Every random decision is a pure function of `(seed, namespace, key)`, so
//! two algorithms that ask the same structural question get the same answer
//! regardless of the order in which they ask it.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Namespace {
    HashSeed,
    G,
    GTilde,
    CopySample,
    CopyAssign,
    Resample,
    Reservoir,
    Subsample,
    Adversary,
    Cset,
    Generator,
}

impl Namespace {
    fn tag(self) -> u64 {
        match self {
            Namespace::HashSeed => 0x48_41_53_48,
            Namespace::G => 0x47,
            Namespace::GTilde => 0x47_54,
            Namespace::CopySample => 0x43_53,
            Namespace::CopyAssign => 0x43_41,
            Namespace::Resample => 0x52_53,
            Namespace::Reservoir => 0x52_56,
            Namespace::Subsample => 0x53_42,
            Namespace::Adversary => 0x41_44,
            Namespace::Cset => 0x43_54,
            Namespace::Generator => 0x47_4e,
        }
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// SplitMix64 stream started from a derived key; feeds `rand` distributions.
#[derive(Clone, Debug)]
pub struct KeyedRng(u64);

impl RngCore for KeyedRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(GOLDEN);
        mix(self.0)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let w = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&w[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// A pseudorandom function from `(namespace, key)` to uniform draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomTape {
    seed: u64,
}

impl RandomTape {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent tape, e.g. for one m-guessing copy or one trial.
    pub fn derive(&self, label: u64) -> Self {
        Self {
            seed: mix(mix(self.seed ^ 0x6465_7269_7665) ^ label.wrapping_mul(GOLDEN)),
        }
    }

    /// A generator seeded by `(namespace, key)`, for use with `rand` helpers.
    pub fn rng(&self, ns: Namespace, key: &[u64]) -> KeyedRng {
        let mut h = mix(self.seed.wrapping_add(ns.tag().wrapping_mul(GOLDEN)));
        for (pos, &k) in key.iter().enumerate() {
            h = mix(h ^ mix(k.wrapping_add((pos as u64 + 1).wrapping_mul(GOLDEN))));
        }
        KeyedRng(h)
    }

    pub fn word(&self, ns: Namespace, key: &[u64]) -> u64 {
        self.rng(ns, key).next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&self, ns: Namespace, key: &[u64]) -> f64 {
        self.rng(ns, key).gen::<f64>()
    }

    pub fn bernoulli(&self, ns: Namespace, key: &[u64], p: f64) -> bool {
        if p >= 1.0 {
            return true;
        }
        if p <= 0.0 {
            return false;
        }
        self.uniform(ns, key) < p
    }

    /// Uniform in `0..n`; `n` must be positive.
    pub fn index(&self, ns: Namespace, key: &[u64], n: u64) -> u64 {
        assert!(n > 0, "index range must be nonempty");
        self.rng(ns, key).gen_range(0..n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_draw() {
        let t = RandomTape::new(42);
        assert_eq!(t.word(Namespace::G, &[1, 2, 3]), t.word(Namespace::G, &[1, 2, 3]));
        assert_ne!(t.word(Namespace::G, &[1, 2, 3]), t.word(Namespace::GTilde, &[1, 2, 3]));
        assert_ne!(t.word(Namespace::G, &[1, 2, 3]), t.word(Namespace::G, &[1, 3, 2]));
        assert_ne!(t.word(Namespace::G, &[1, 2]), t.word(Namespace::G, &[1, 2, 0]));
        assert_ne!(t.word(Namespace::G, &[7]), RandomTape::new(43).word(Namespace::G, &[7]));
    }

    #[test]
    fn uniform_moments() {
        let t = RandomTape::new(1);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|i| t.uniform(Namespace::Resample, &[i])).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.002, "var {var}");
    }

    #[test]
    fn index_is_in_range_and_spread() {
        let t = RandomTape::new(9);
        let mut counts = [0usize; 7];
        for i in 0..70_000 {
            counts[t.index(Namespace::CopyAssign, &[i, 1], 7) as usize] += 1;
        }
        for c in counts {
            assert!((c as i64 - 10_000).abs() < 500, "{counts:?}");
        }
    }

    #[test]
    fn derived_tapes_differ() {
        let t = RandomTape::new(5);
        assert_ne!(t.derive(0).seed(), t.derive(1).seed());
        assert_eq!(t.derive(3), t.derive(3));
    }
}
