use std::collections::BTreeMap;
use std::sync::Arc;

use crate::csp::{Instance, PredicateRegistry};
use crate::error::{Error, Result};
use crate::reduced::{ConstraintCopyId, CopyKey, CopySpec, ReducedInstance, Tier, VarCopy};
use crate::tape::{Namespace, RandomTape};

use super::config::{Params, Wiring};
use super::policy::{in_g, pos_key, Tiering};

/// Copies `j ∈ 1..=d̃` of `v` kept by the per-copy Bernoulli(1/R) draws.
pub fn copy_sample_set(tape: &RandomTape, v: u32, dtilde: usize, params: &Params) -> Vec<u32> {
    let p = params.sample_prob();
    (1..=dtilde as u32)
        .filter(|&j| tape.bernoulli(Namespace::CopySample, &[v as u64, j as u64], p))
        .collect()
}

/// Chance that a `G` pair of a high-tier variable survives the resampling
/// step, `j / (d̃ · 2R⁻¹)`.
pub fn retention_ratio(sampled: usize, dtilde: usize, params: &Params) -> f64 {
    sampled as f64 / (dtilde as f64 * params.g_prob)
}

fn to_registry(inst: &Instance) -> Arc<PredicateRegistry> {
    let mut reg = PredicateRegistry::new();
    for (_, p) in inst.predicates().iter() {
        reg.intern(p.clone());
    }
    Arc::new(reg)
}

fn check(inst: &Instance, b: usize, tiering: &Tiering, eps: f64) -> Result<()> {
    if b == 0 {
        return Err(Error::InvalidParameter("B must be ≥ 1".into()));
    }
    if tiering.dtilde.len() != inst.n() || tiering.tier.len() != inst.n() {
        return Err(Error::LengthMismatch { expected: inst.n(), got: tiering.dtilde.len() });
    }
    tiering.check_band(&inst.degrees(), eps)
}

fn copies_of(tiering: &Tiering) -> Vec<VarCopy> {
    tiering
        .dtilde
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| {
            let tier = tiering.tier[v];
            (1..=d as u32).map(move |j| VarCopy { parent: v as u32, copy_index: j, tier })
        })
        .collect()
}

fn dtilde_map(tiering: &Tiering) -> BTreeMap<u32, usize> {
    tiering
        .dtilde
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > 0)
        .map(|(v, &d)| (v as u32, d))
        .collect()
}

fn build(
    inst: &Instance,
    b: usize,
    tiering: &Tiering,
    mut pick: impl FnMut(u32, u32, usize, u32) -> u32,
) -> Result<ReducedInstance> {
    let preds = to_registry(inst);
    let mut specs = Vec::with_capacity(inst.m() * b);
    for (i, c) in inst.constraints().iter().enumerate() {
        for l in 0..b as u32 {
            let vars = c
                .vars
                .iter()
                .enumerate()
                .map(|(t, &v)| CopyKey::new(v, pick(i as u32, l, t, v)))
                .collect();
            specs.push(CopySpec { id: ConstraintCopyId::new(i as u32, l), pred: c.pred, vars, dummy: false });
        }
    }
    ReducedInstance::new(inst.alphabet(), preds, copies_of(tiering), specs, inst.m(), b, dtilde_map(tiering))
}

/// Makes `B` copies of every constraint and wires position `t` of copy
/// `(i, l)` to a uniform copy of its variable, keyed on `(i, l, t)`.
pub fn trevisan_reduce(inst: &Instance, b: usize, tiering: &Tiering, eps_adv: f64, tape: &RandomTape) -> Result<ReducedInstance> {
    check(inst, b, tiering, eps_adv)?;
    build(inst, b, tiering, |i, l, t, v| {
        1 + tape.index(Namespace::CopyAssign, &pos_key(i, l, t), tiering.dtilde[v as usize] as u64) as u32
    })
}

/// Like [`trevisan_reduce`], but high-tier positions are routed through the
/// events the streaming reduction observes. Given the copy sample `S_v`, a
/// position goes to `S_v` with probability `|S_v|/d̃` and uniformly within
/// whichever side it lands on, so every position is still uniform on `[d̃]`.
pub fn trevisan_reduce_coupled(inst: &Instance, tiering: &Tiering, params: &Params, tape: &RandomTape) -> Result<ReducedInstance> {
    check(inst, params.b, tiering, params.eps_adv)?;
    let mut sampled: BTreeMap<u32, (Vec<u32>, Vec<u32>)> = BTreeMap::new();
    for v in 0..inst.n() {
        if tiering.tier[v] == Tier::High && tiering.dtilde[v] > 0 {
            let s = copy_sample_set(tape, v as u32, tiering.dtilde[v], params);
            let rest = (1..=tiering.dtilde[v] as u32).filter(|j| s.binary_search(j).is_err()).collect();
            sampled.insert(v as u32, (s, rest));
        }
    }
    build(inst, params.b, tiering, |i, l, t, v| {
        let d = tiering.dtilde[v as usize];
        let key = pos_key(i, l, t);
        let Some((s, rest)) = sampled.get(&v) else {
            return 1 + tape.index(Namespace::CopyAssign, &key, d as u64) as u32;
        };
        let ratio = retention_ratio(s.len(), d, params);
        let kept = if ratio <= 1.0 {
            in_g(tape, i, l, t, params) && tape.uniform(Namespace::Resample, &key) < ratio
        } else {
            tape.uniform(Namespace::Resample, &[key[0], key[1], key[2], 1]) < s.len() as f64 / d as f64
        };
        if kept && !s.is_empty() {
            s[tape.index(Namespace::CopyAssign, &key, s.len() as u64) as usize]
        } else if !rest.is_empty() {
            rest[tape.index(Namespace::CopyAssign, &key, rest.len() as u64) as usize]
        } else {
            s[tape.index(Namespace::CopyAssign, &key, s.len() as u64) as usize]
        }
    })
}

/// Dispatches on the configured wiring.
pub fn reduce_with(inst: &Instance, tiering: &Tiering, params: &Params, tape: &RandomTape) -> Result<ReducedInstance> {
    match params.wiring {
        Wiring::Uniform => trevisan_reduce(inst, params.b, tiering, params.eps_adv, tape),
        Wiring::Coupled => trevisan_reduce_coupled(inst, tiering, params, tape),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{brute_force_val, Alphabet, Predicate};
    use crate::reduction::EstimatorConfig;

    fn exact_tiering(inst: &Instance) -> Tiering {
        let degrees = inst.degrees();
        Tiering { tier: vec![Tier::Low; inst.n()], dtilde: degrees, gtilde_degree: None, band_violations: vec![] }
    }

    #[test]
    fn single_constraint_two_copies() {
        let inst = Instance::from_constraints(2, Alphabet::new(2).unwrap(), vec![(Predicate::xor(), vec![0, 1])]).unwrap();
        let r = trevisan_reduce(&inst, 2, &exact_tiering(&inst), 0.0, &RandomTape::new(0)).unwrap();
        assert_eq!(r.copies().len(), 2);
        assert_eq!(r.constraints().len(), 2);
        for c in r.constraints() {
            let keys: Vec<_> = c.vars.iter().map(|&v| r.copies()[v as usize].key()).collect();
            assert_eq!(keys, vec![CopyKey::new(0, 1), CopyKey::new(1, 1)]);
        }
    }

    #[test]
    fn structure_and_lower_sandwich() {
        let inst = Instance::from_constraints(
            4,
            Alphabet::new(2).unwrap(),
            vec![
                (Predicate::xor(), vec![0, 1]),
                (Predicate::xor(), vec![1, 2]),
                (Predicate::dicut(), vec![2, 0]),
                (Predicate::xor(), vec![2, 3]),
            ],
        )
        .unwrap();
        let val = brute_force_val(&inst).unwrap();
        for seed in 0..20 {
            let r = trevisan_reduce(&inst, 3, &exact_tiering(&inst), 0.0, &RandomTape::new(seed)).unwrap();
            assert_eq!(r.constraints().len(), 12);
            for c in r.constraints() {
                let orig = &inst.constraints()[c.id.constraint as usize];
                for (t, &v) in c.vars.iter().enumerate() {
                    let copy = r.copies()[v as usize];
                    assert_eq!(copy.parent, orig.vars[t]);
                    assert!(copy.copy_index as usize <= inst.degrees()[copy.parent as usize]);
                }
            }
            assert!(brute_force_val(&r.to_instance()).unwrap() >= val);
        }
    }

    #[test]
    fn band_is_enforced() {
        let inst = Instance::from_constraints(2, Alphabet::new(2).unwrap(), vec![(Predicate::xor(), vec![0, 1])]).unwrap();
        let mut t = exact_tiering(&inst);
        t.dtilde[0] = 3;
        assert!(matches!(
            trevisan_reduce(&inst, 2, &t, 0.5, &RandomTape::new(0)),
            Err(Error::OutOfBand { var: 0, .. })
        ));
    }

    #[test]
    fn coupled_wiring_is_uniform_per_position() {
        let inst = Instance::from_constraints(
            41,
            Alphabet::new(2).unwrap(),
            (1..=40u32).map(|u| (Predicate::xor(), vec![0, u])),
        )
        .unwrap();
        let params = EstimatorConfig { b: Some(1), hash_range: Some(4), epsilon: 0.9, ..Default::default() }
            .coupled()
            .resolve(41, 2, 2, None)
            .unwrap();
        let mut tiering = exact_tiering(&inst);
        tiering.tier[0] = Tier::High;
        tiering.dtilde[0] = 8;
        let trials = 16_000;
        let mut counts = [0usize; 8];
        for seed in 0..trials {
            let r = trevisan_reduce_coupled(&inst, &tiering, &params, &RandomTape::new(seed)).unwrap();
            let c = &r.constraints()[0];
            counts[r.copies()[c.vars[0] as usize].copy_index as usize - 1] += 1;
        }
        let p = 1.0 / 8.0;
        let sd = (trials as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - trials as f64 * p).abs() < 4.0 * sd, "{counts:?}");
        }
    }
}
