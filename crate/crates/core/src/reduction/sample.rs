use std::collections::HashMap;

use rand::seq::index;

use crate::hash::KWiseHash;
use crate::reduced::{ConstraintCopyId, ReducedInstance, Tier};
use crate::reservoir::Reservoir;
use crate::tape::{Namespace, RandomTape};

use super::config::{CsetSampler, Params};

/// The hash shared by the offline and streaming paths.
pub fn sample_hash(params: &Params, tape: &RandomTape) -> KWiseHash {
    KWiseHash::from_tape(tape, params.hash_width, params.hash_range).expect("width and range are positive")
}

/// Which copies of `red` are stored: all copies of a low-tier parent with
/// `H(v) = 1`, and each high-tier copy independently with probability `1/R`.
pub fn offline_sample(red: &ReducedInstance, params: &Params, hash: &KWiseHash, tape: &RandomTape) -> Vec<bool> {
    let mut hashed: HashMap<u32, bool> = HashMap::new();
    let p = params.sample_prob();
    red.copies()
        .iter()
        .map(|c| match c.tier {
            Tier::Low => *hashed.entry(c.parent).or_insert_with(|| hash.hits(c.parent as u64)),
            Tier::High => tape.bernoulli(Namespace::CopySample, &[c.parent as u64, c.copy_index as u64], p),
        })
        .collect()
}

/// `min(|C|, mB)` constraint-copy ids drawn without replacement, sorted.
pub fn sample_cset(m: usize, b: usize, params: &Params, tape: &RandomTape) -> Vec<ConstraintCopyId> {
    let total = m * b;
    if total == 0 {
        return Vec::new();
    }
    let size = params.cset_size.min(total);
    let id = |x: usize| ConstraintCopyId::new((x / b) as u32, (x % b) as u32);
    let mut out: Vec<ConstraintCopyId> = match params.cset_sampler {
        CsetSampler::FisherYates => {
            let mut rng = tape.rng(Namespace::Cset, &[]);
            index::sample(&mut rng, total, size).into_iter().map(id).collect()
        }
        CsetSampler::ReservoirReplay => {
            let mut res = Reservoir::new(params.cset_size).expect("cset size is positive");
            for x in 0..total {
                res.update(id(x), tape);
            }
            res.into_items()
        }
    };
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduced::tests::xor_path;
    use crate::reduction::EstimatorConfig;

    fn params(range: u64) -> Params {
        EstimatorConfig { b: Some(1), hash_range: Some(range), t_max: Some(2), ..Default::default() }
            .resolve(16, 2, 2, None)
            .unwrap()
    }

    #[test]
    fn range_one_keeps_everything() {
        let p = params(1);
        let tape = RandomTape::new(5);
        let h = sample_hash(&p, &tape);
        for tier in [Tier::Low, Tier::High] {
            let mask = offline_sample(&xor_path(5, tier), &p, &h, &tape);
            assert!(mask.iter().all(|&x| x));
        }
    }

    #[test]
    fn inclusion_probability_is_one_over_range() {
        let p = params(4);
        let trials = 10_000;
        for tier in [Tier::Low, Tier::High] {
            let red = xor_path(3, tier);
            let mut hits = 0;
            for seed in 0..trials {
                let tape = RandomTape::new(seed);
                hits += offline_sample(&red, &p, &sample_hash(&p, &tape), &tape)[2] as usize;
            }
            let sd = (trials as f64 * 0.25 * 0.75).sqrt();
            assert!((hits as f64 - trials as f64 * 0.25).abs() < 3.0 * sd, "{tier}: {hits}");
        }
    }

    #[test]
    fn cset_sizes_and_clamp() {
        let mut p = params(2);
        p.cset_size = 5;
        for sampler in [CsetSampler::FisherYates, CsetSampler::ReservoirReplay] {
            p.cset_sampler = sampler;
            let c = sample_cset(4, 3, &p, &RandomTape::new(2));
            assert_eq!(c.len(), 5);
            assert!(c.windows(2).all(|w| w[0] < w[1]));
            assert_eq!(sample_cset(1, 2, &p, &RandomTape::new(2)).len(), 2);
        }
    }
}
