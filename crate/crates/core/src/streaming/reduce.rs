use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::reduced::{CopyKey, CopySpec, ReducedInstance, Tier, VarCopy};
use crate::reduction::policy::pos_key;
use crate::reduction::{copy_sample_set, dtilde_from_gtilde, retention_ratio, Params};
use crate::tape::{Namespace, RandomTape};

use super::sketch::Sketch;

/// The reduced sub-instance rebuilt from a sketch.
#[derive(Clone, Debug)]
pub struct StreamReduction {
    pub instance: ReducedInstance,
    /// Full degree of every created copy.
    pub degs: HashMap<CopyKey, usize>,
    pub gtilde_degree: BTreeMap<u32, usize>,
    pub high: BTreeMap<u32, HighVar>,
    /// Copy count of every low-tier variable in `S`.
    pub low: BTreeMap<u32, usize>,
}

/// A high-tier variable: `d̃` and which of its `d̃` copies the simulated
/// draws kept. Online copy `a` stands for `labels[a - 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HighVar {
    pub dtilde: usize,
    pub labels: Vec<u32>,
    pub ratio: f64,
}

impl StreamReduction {
    /// Maps online copy labels to the labels of the full reduction.
    pub fn offline_label(&self, key: CopyKey) -> CopyKey {
        match self.high.get(&key.parent) {
            Some(h) => CopyKey::new(key.parent, h.labels[key.copy as usize - 1]),
            None => key,
        }
    }
}

/// Wires the stored copies and drops any with an unassigned position.
pub fn streaming_reduction(sk: &Sketch, params: &Params, tape: &RandomTape) -> Result<StreamReduction> {
    let mut gtilde_degree: BTreeMap<u32, usize> = BTreeMap::new();
    for &v in sk.gtilde.values() {
        *gtilde_degree.entry(v).or_default() += 1;
    }
    let mut high = BTreeMap::new();
    for (&v, &g) in &gtilde_degree {
        if g as f64 <= params.nq {
            continue;
        }
        let dtilde = dtilde_from_gtilde(g, params);
        let labels = copy_sample_set(tape, v, dtilde, params);
        let ratio = retention_ratio(labels.len(), dtilde, params);
        if ratio > 1.0 {
            return Err(Error::Terminated { var: v, probability: ratio });
        }
        high.insert(v, HighVar { dtilde, labels, ratio });
    }
    let low: BTreeMap<u32, usize> = sk
        .degs
        .iter()
        .filter(|(v, _)| !high.contains_key(v))
        .map(|(&v, &d)| (v, d / sk.b))
        .collect();

    let mut degs: HashMap<CopyKey, usize> = HashMap::new();
    let mut copies = Vec::new();
    for (&v, &d) in &low {
        for j in 1..=d as u32 {
            copies.push(VarCopy { parent: v, copy_index: j, tier: Tier::Low });
            degs.insert(CopyKey::new(v, j), 0);
        }
    }
    for (&v, h) in &high {
        for a in 1..=h.labels.len() as u32 {
            copies.push(VarCopy { parent: v, copy_index: a, tier: Tier::High });
            degs.insert(CopyKey::new(v, a), 0);
        }
    }

    let mut specs = Vec::new();
    for (&id, stored) in &sk.f {
        let mut keys = Vec::with_capacity(stored.vars.len());
        for (t, &v) in stored.vars.iter().enumerate() {
            let key = pos_key(id.constraint, id.copy, t);
            let assigned = if let Some(h) = high.get(&v) {
                let retained = sk.g.contains(&(id, t as u32)) && tape.uniform(Namespace::Resample, &key) < h.ratio;
                retained.then(|| 1 + tape.index(Namespace::CopyAssign, &key, h.labels.len() as u64) as u32)
            } else {
                low.get(&v).map(|&d| 1 + tape.index(Namespace::CopyAssign, &key, d as u64) as u32)
            };
            keys.push(assigned.map(|j| CopyKey::new(v, j)));
        }
        let mut seen: Vec<CopyKey> = keys.iter().flatten().copied().collect();
        seen.sort_unstable();
        seen.dedup();
        for k in seen {
            *degs.get_mut(&k).expect("assigned copies exist") += 1;
        }
        if keys.iter().all(Option::is_some) {
            specs.push(CopySpec { id, pred: stored.pred, vars: keys.into_iter().flatten().collect(), dummy: false });
        }
    }
    let dtilde = low
        .iter()
        .map(|(&v, &d)| (v, d))
        .chain(high.iter().map(|(&v, h)| (v, h.dtilde)))
        .collect();
    let mut reg = crate::csp::PredicateRegistry::new();
    for (_, p) in sk.preds.iter() {
        reg.intern(p.clone());
    }
    let instance = ReducedInstance::new(sk.header.alphabet, Arc::new(reg), copies, specs, sk.count, sk.b, dtilde)?;
    Ok(StreamReduction { instance, degs, gtilde_degree, high, low })
}
