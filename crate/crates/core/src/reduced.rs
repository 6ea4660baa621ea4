//! Degree-reduced instances: variable copies and constraint copies.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::csp::{Alphabet, Instance, PredId, Predicate, PredicateRegistry};
use crate::error::{Error, Result};

/// Copy `copy` (0-based, `< B`) of original constraint `constraint`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConstraintCopyId {
    pub constraint: u32,
    pub copy: u32,
}

impl ConstraintCopyId {
    pub fn new(constraint: u32, copy: u32) -> Self {
        Self { constraint, copy }
    }
}

impl fmt::Display for ConstraintCopyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.constraint, self.copy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Low,
    High,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Low => "low",
            Tier::High => "high",
        })
    }
}

/// Identity of a variable copy `(v, j)`, `j ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CopyKey {
    pub parent: u32,
    pub copy: u32,
}

impl CopyKey {
    pub fn new(parent: u32, copy: u32) -> Self {
        Self { parent, copy }
    }
}

impl fmt::Display for CopyKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}.{}", self.parent, self.copy)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarCopy {
    pub parent: u32,
    pub copy_index: u32,
    pub tier: Tier,
}

impl VarCopy {
    pub fn key(&self) -> CopyKey {
        CopyKey::new(self.parent, self.copy_index)
    }
}

/// A constraint copy; `vars` index into the owning instance's copy list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintCopy {
    pub id: ConstraintCopyId,
    pub pred: PredId,
    pub vars: Vec<u32>,
    /// Replaced by an always-false constraint during degree bounding.
    pub dummy: bool,
}

/// Input record for [`ReducedInstance::new`].
#[derive(Clone, Debug)]
pub struct CopySpec {
    pub id: ConstraintCopyId,
    pub pred: PredId,
    pub vars: Vec<CopyKey>,
    pub dummy: bool,
}

#[derive(Clone, Debug)]
pub struct ReducedInstance {
    alphabet: Alphabet,
    preds: Arc<PredicateRegistry>,
    copies: Vec<VarCopy>,
    copy_index: HashMap<CopyKey, u32>,
    constraints: Vec<ConstraintCopy>,
    constraint_index: HashMap<ConstraintCopyId, u32>,
    adjacency: Vec<Vec<u32>>,
    m: usize,
    b: usize,
    dtilde: BTreeMap<u32, usize>,
}

impl ReducedInstance {
    /// Builds an instance; copies and constraints are sorted by key and id.
    /// Dummy constraints are kept but are not adjacent to anything.
    pub fn new(
        alphabet: Alphabet,
        preds: Arc<PredicateRegistry>,
        mut copies: Vec<VarCopy>,
        mut specs: Vec<CopySpec>,
        m: usize,
        b: usize,
        dtilde: BTreeMap<u32, usize>,
    ) -> Result<Self> {
        copies.sort_by_key(|c| c.key());
        copies.dedup_by_key(|c| c.key());
        let copy_index: HashMap<CopyKey, u32> = copies
            .iter()
            .enumerate()
            .map(|(i, c)| (c.key(), i as u32))
            .collect();
        specs.sort_by_key(|s| s.id);
        let mut constraints = Vec::with_capacity(specs.len());
        for s in specs {
            if s.pred.0 as usize >= preds.len() {
                return Err(Error::InvalidPredicate(format!("unknown predicate id {}", s.pred)));
            }
            let vars = s
                .vars
                .iter()
                .map(|k| {
                    copy_index.get(k).copied().ok_or({
                        Error::MissingDegree { parent: k.parent, copy: k.copy }
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            constraints.push(ConstraintCopy { id: s.id, pred: s.pred, vars, dummy: s.dummy });
        }
        let constraint_index = constraints
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id, i as u32))
            .collect();
        let mut out = Self {
            alphabet,
            preds,
            copies,
            copy_index,
            constraints,
            constraint_index,
            adjacency: Vec::new(),
            m,
            b,
            dtilde,
        };
        out.rebuild_adjacency();
        Ok(out)
    }

    fn rebuild_adjacency(&mut self) {
        let mut adj = vec![Vec::new(); self.copies.len()];
        for (ci, c) in self.constraints.iter().enumerate() {
            if c.dummy {
                continue;
            }
            for (t, &v) in c.vars.iter().enumerate() {
                if !c.vars[..t].contains(&v) {
                    adj[v as usize].push(ci as u32);
                }
            }
        }
        self.adjacency = adj;
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn predicates(&self) -> &Arc<PredicateRegistry> {
        &self.preds
    }

    pub fn predicate(&self, id: PredId) -> &Predicate {
        self.preds.get(id)
    }

    pub fn copies(&self) -> &[VarCopy] {
        &self.copies
    }

    pub fn constraints(&self) -> &[ConstraintCopy] {
        &self.constraints
    }

    pub fn copy_position(&self, key: CopyKey) -> Option<usize> {
        self.copy_index.get(&key).map(|&i| i as usize)
    }

    pub fn constraint_position(&self, id: ConstraintCopyId) -> Option<usize> {
        self.constraint_index.get(&id).map(|&i| i as usize)
    }

    /// Live constraints adjacent to copy `idx`, each listed once.
    pub fn adjacent(&self, idx: usize) -> &[u32] {
        &self.adjacency[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.adjacency[idx].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    /// Number of original constraints.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Copies per original constraint.
    pub fn b(&self) -> usize {
        self.b
    }

    pub fn dtilde(&self) -> &BTreeMap<u32, usize> {
        &self.dtilde
    }

    pub fn is_satisfied(&self, ci: usize, values: &[u8]) -> bool {
        let c = &self.constraints[ci];
        if c.dummy {
            return false;
        }
        let p = self.preds.get(c.pred);
        let idx = c
            .vars
            .iter()
            .fold(0usize, |acc, &v| acc * p.sigma() + values[v as usize] as usize);
        p.table()[idx]
    }

    fn with_parts(&self, copies: Vec<VarCopy>, specs: Vec<CopySpec>) -> Self {
        Self::new(self.alphabet, self.preds.clone(), copies, specs, self.m, self.b, self.dtilde.clone())
            .expect("parts drawn from a valid instance")
    }

    fn spec_of(&self, c: &ConstraintCopy) -> CopySpec {
        CopySpec {
            id: c.id,
            pred: c.pred,
            vars: c.vars.iter().map(|&v| self.copies[v as usize].key()).collect(),
            dummy: c.dummy,
        }
    }

    /// The sub-instance on copies with `mask[idx]`, keeping exactly the
    /// constraints whose copies are all kept.
    pub fn induced(&self, mask: &[bool]) -> Self {
        let copies = self
            .copies
            .iter()
            .zip(mask)
            .filter(|(_, &k)| k)
            .map(|(c, _)| *c)
            .collect();
        let specs = self
            .constraints
            .iter()
            .filter(|c| c.vars.iter().all(|&v| mask[v as usize]))
            .map(|c| self.spec_of(c))
            .collect();
        self.with_parts(copies, specs)
    }

    /// Replaces the given constraints by dummies.
    pub fn with_dummies(&self, dummies: &[usize]) -> Self {
        let mut out = self.clone();
        for &ci in dummies {
            out.constraints[ci].dummy = true;
        }
        out.rebuild_adjacency();
        out
    }

    /// Replaces every constraint adjacent to a copy of degree `> cap` by a
    /// dummy and returns the bounded instance with its new degrees.
    pub fn bound_degree(&self, cap: usize) -> (Self, Vec<usize>) {
        let over: Vec<usize> = (0..self.copies.len()).filter(|&i| self.degree(i) > cap).collect();
        let mut dummies: Vec<usize> = over
            .iter()
            .flat_map(|&i| self.adjacency[i].iter().map(|&c| c as usize))
            .collect();
        dummies.sort_unstable();
        dummies.dedup();
        let out = self.with_dummies(&dummies);
        let degs = out.degrees();
        (out, degs)
    }

    pub fn num_dummies(&self) -> usize {
        self.constraints.iter().filter(|c| c.dummy).count()
    }

    /// Applies `f` to every copy key, e.g. to map streaming labels onto
    /// offline labels.
    pub fn relabel(&self, f: impl Fn(CopyKey) -> CopyKey) -> Self {
        let copies = self
            .copies
            .iter()
            .map(|c| {
                let k = f(c.key());
                VarCopy { parent: k.parent, copy_index: k.copy, tier: c.tier }
            })
            .collect();
        let specs = self
            .constraints
            .iter()
            .map(|c| {
                let mut s = self.spec_of(c);
                s.vars = s.vars.into_iter().map(&f).collect();
                s
            })
            .collect();
        self.with_parts(copies, specs)
    }

    /// Label-level description for equality checks across instances.
    pub fn signature(&self) -> Vec<(ConstraintCopyId, bool, String, Vec<CopyKey>)> {
        self.constraints
            .iter()
            .map(|c| {
                (
                    c.id,
                    c.dummy,
                    self.preds.get(c.pred).bitstring(),
                    c.vars.iter().map(|&v| self.copies[v as usize].key()).collect(),
                )
            })
            .collect()
    }

    /// Flattens to a plain instance over variables `0..copies.len()`;
    /// dummies become always-false predicates.
    pub fn to_instance(&self) -> Instance {
        let mut inst = Instance::new(self.copies.len(), self.alphabet);
        for c in &self.constraints {
            let p = self.preds.get(c.pred);
            let p = if c.dummy {
                Predicate::constant(p.arity(), p.sigma(), false).expect("valid arity")
            } else {
                p.clone()
            };
            let id = inst.intern(p).expect("same alphabet");
            inst.push(id, c.vars.clone()).expect("indices in range");
        }
        inst
    }

    /// Text form with copies rendered `v<parent>.<copy>`.
    pub fn dump(&self) -> String {
        let inst = self.to_instance();
        let mut out = String::new();
        let _ = writeln!(out, "csp {} {} {} {}", inst.n(), inst.m(), inst.sigma(), inst.k());
        for (id, p) in inst.predicates().iter() {
            let _ = writeln!(out, "pred {} {}", id, p.bitstring());
        }
        for c in inst.constraints() {
            let _ = write!(out, "c {}", c.pred);
            for &v in &c.vars {
                let _ = write!(out, " {}", self.copies[v as usize].key());
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// A path of XOR copies `(0,0)..(len-1,0)` over copies `v0.1 .. v<len>.1`.
    pub fn xor_path(len: usize, tier: Tier) -> ReducedInstance {
        let mut reg = PredicateRegistry::new();
        let xor = reg.intern(Predicate::xor());
        let copies = (0..=len as u32)
            .map(|v| VarCopy { parent: v, copy_index: 1, tier })
            .collect();
        let specs = (0..len as u32)
            .map(|i| CopySpec {
                id: ConstraintCopyId::new(i, 0),
                pred: xor,
                vars: vec![CopyKey::new(i, 1), CopyKey::new(i + 1, 1)],
                dummy: false,
            })
            .collect();
        ReducedInstance::new(Alphabet::new(2).unwrap(), Arc::new(reg), copies, specs, len, 1, BTreeMap::new()).unwrap()
    }

    /// `leaves` XOR copies all touching the hub copy `v0.1`.
    pub fn xor_star(leaves: usize) -> ReducedInstance {
        let mut reg = PredicateRegistry::new();
        let xor = reg.intern(Predicate::xor());
        let copies = (0..=leaves as u32)
            .map(|v| VarCopy { parent: v, copy_index: 1, tier: Tier::Low })
            .collect();
        let specs = (0..leaves as u32)
            .map(|i| CopySpec {
                id: ConstraintCopyId::new(i, 0),
                pred: xor,
                vars: vec![CopyKey::new(0, 1), CopyKey::new(i + 1, 1)],
                dummy: false,
            })
            .collect();
        ReducedInstance::new(Alphabet::new(2).unwrap(), Arc::new(reg), copies, specs, leaves, 1, BTreeMap::new()).unwrap()
    }

    #[test]
    fn induced_keeps_only_complete_constraints() {
        let p = xor_path(3, Tier::Low);
        let sub = p.induced(&[true, true, false, true]);
        assert_eq!(sub.copies().len(), 3);
        assert_eq!(sub.constraints().len(), 1);
        assert_eq!(sub.constraints()[0].id, ConstraintCopyId::new(0, 0));
    }

    #[test]
    fn bound_degree_examples() {
        let star = xor_star(5);
        let (same, degs) = star.bound_degree(5);
        assert_eq!(same.num_dummies(), 0);
        assert_eq!(degs[0], 5);
        let (bdd, degs) = star.bound_degree(4);
        assert_eq!(bdd.num_dummies(), 5);
        assert_eq!(degs, vec![0; 6]);
        let (again, degs2) = bdd.bound_degree(4);
        assert_eq!(again.signature(), bdd.signature());
        assert_eq!(degs2, degs);
    }

    #[test]
    fn dump_renders_copy_labels() {
        let p = xor_path(2, Tier::Low);
        assert_eq!(p.dump(), "csp 3 2 2 2\npred 0 0110\nc 0 v0.1 v1.1\nc 0 v1.1 v2.1\n");
    }

    #[test]
    fn relabel_round_trip() {
        let p = xor_path(2, Tier::High);
        let shifted = p.relabel(|k| CopyKey::new(k.parent, k.copy + 4));
        let back = shifted.relabel(|k| CopyKey::new(k.parent, k.copy - 4));
        assert_eq!(back.signature(), p.signature());
        assert_ne!(shifted.signature(), p.signature());
    }
}
