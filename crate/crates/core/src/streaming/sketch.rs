use std::collections::{BTreeMap, BTreeSet};

use crate::csp::{Alphabet, Instance, PredId, Predicate, PredicateRegistry};
use crate::error::{Error, Result};
use crate::hash::KWiseHash;
use crate::reduced::ConstraintCopyId;
use crate::reduction::policy::{in_g, in_gtilde};
use crate::reduction::{sample_hash, Params};
use crate::reservoir::Reservoir;
use crate::tape::RandomTape;

/// One stream element: a constraint with its structural index.
#[derive(Clone, Copy, Debug)]
pub struct StreamItem<'a> {
    pub index: u32,
    pub pred: &'a Predicate,
    pub vars: &'a [u32],
}

/// What the stream announces up front.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamHeader {
    pub n: usize,
    pub k: usize,
    pub alphabet: Alphabet,
}

impl StreamHeader {
    pub fn of(inst: &Instance) -> Self {
        Self { n: inst.n(), k: inst.k(), alphabet: inst.alphabet() }
    }
}

/// The constraints of `inst` in stored order.
pub fn instance_stream(inst: &Instance) -> impl Iterator<Item = StreamItem<'_>> {
    inst.constraints().iter().enumerate().map(move |(i, c)| StreamItem {
        index: i as u32,
        pred: inst.predicate(c.pred),
        vars: &c.vars,
    })
}

/// The constraints of `inst` in the order given by `order`.
pub fn permuted_stream<'a>(inst: &'a Instance, order: &'a [usize]) -> impl Iterator<Item = StreamItem<'a>> {
    order.iter().map(move |&i| {
        let c = &inst.constraints()[i];
        StreamItem { index: i as u32, pred: inst.predicate(c.pred), vars: &c.vars }
    })
}

/// A stored constraint copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoredCopy {
    pub pred: PredId,
    pub vars: Vec<u32>,
}

/// The single-pass state.
#[derive(Clone, Debug)]
pub struct Sketch {
    pub header: StreamHeader,
    pub b: usize,
    pub preds: PredicateRegistry,
    pub s: BTreeSet<u32>,
    /// Per-copy count: `B · deg(v)` at the end of the stream.
    pub degs: BTreeMap<u32, usize>,
    pub f: BTreeMap<ConstraintCopyId, StoredCopy>,
    pub g: BTreeSet<(ConstraintCopyId, u32)>,
    /// `G̃` pairs with the parent variable at that position.
    pub gtilde: BTreeMap<(ConstraintCopyId, u32), u32>,
    pub reservoir: Reservoir<ConstraintCopyId>,
    pub count: usize,
    pub peak_space: usize,
}

/// Order-free view of a sketch, with predicates as truth tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SketchComponents {
    pub s: BTreeSet<u32>,
    pub degs: BTreeMap<u32, usize>,
    pub f: BTreeMap<ConstraintCopyId, (String, Vec<u32>)>,
    pub g: BTreeSet<(ConstraintCopyId, u32)>,
    pub gtilde: BTreeMap<(ConstraintCopyId, u32), u32>,
}

impl Sketch {
    /// Live entries across `S`, `degs`, `F`, `G`, `G̃` and the reservoir.
    pub fn space(&self) -> usize {
        self.s.len() + self.degs.len() + self.f.len() + self.g.len() + self.gtilde.len() + self.reservoir.len()
    }

    pub fn components(&self) -> SketchComponents {
        SketchComponents {
            s: self.s.clone(),
            degs: self.degs.clone(),
            f: self
                .f
                .iter()
                .map(|(id, c)| (*id, (self.preds.get(c.pred).bitstring(), c.vars.clone())))
                .collect(),
            g: self.g.clone(),
            gtilde: self.gtilde.clone(),
        }
    }
}

/// Consumes a stream one constraint at a time.
pub struct SketchBuilder<'p> {
    params: &'p Params,
    tape: RandomTape,
    hash: KWiseHash,
    sketch: Sketch,
}

impl<'p> SketchBuilder<'p> {
    pub fn new(header: StreamHeader, params: &'p Params, tape: RandomTape) -> Result<Self> {
        let hash = sample_hash(params, &tape);
        Ok(Self {
            params,
            tape,
            hash,
            sketch: Sketch {
                header,
                b: params.b,
                preds: PredicateRegistry::new(),
                s: BTreeSet::new(),
                degs: BTreeMap::new(),
                f: BTreeMap::new(),
                g: BTreeSet::new(),
                gtilde: BTreeMap::new(),
                reservoir: Reservoir::new(params.cset_size)?,
                count: 0,
                peak_space: 0,
            },
        })
    }

    pub fn hash(&self) -> &KWiseHash {
        &self.hash
    }

    pub fn space(&self) -> usize {
        self.sketch.space()
    }

    pub fn push(&mut self, item: StreamItem<'_>) -> Result<()> {
        let header = self.sketch.header;
        if item.vars.len() != item.pred.arity() {
            return Err(Error::LengthMismatch { expected: item.pred.arity(), got: item.vars.len() });
        }
        if item.pred.sigma() != header.alphabet.size() {
            return Err(Error::InvalidPredicate("alphabet differs from the stream header".into()));
        }
        if let Some(&v) = item.vars.iter().find(|&&v| v as usize >= header.n) {
            return Err(Error::VariableOutOfRange { var: v as usize, n: header.n });
        }
        let sk = &mut self.sketch;
        let mut hashed = Vec::with_capacity(item.vars.len());
        for &v in item.vars {
            let hit = self.hash.hits(v as u64);
            if hit && sk.s.insert(v) {
                sk.degs.insert(v, 0);
            }
            hashed.push(hit);
        }
        let mut distinct: Vec<u32> = item.vars.iter().zip(&hashed).filter(|(_, &h)| h).map(|(&v, _)| v).collect();
        distinct.sort_unstable();
        distinct.dedup();
        let pred = sk.preds.intern(item.pred.clone());
        for l in 0..self.params.b as u32 {
            let id = ConstraintCopyId::new(item.index, l);
            sk.reservoir.update(id, &self.tape);
            let mut keep = !distinct.is_empty();
            for (t, &v) in item.vars.iter().enumerate() {
                if in_g(&self.tape, item.index, l, t, self.params) {
                    sk.g.insert((id, t as u32));
                    keep = true;
                }
                if in_gtilde(&self.tape, item.index, l, t, self.params) {
                    sk.gtilde.insert((id, t as u32), v);
                }
            }
            for v in &distinct {
                *sk.degs.get_mut(v).expect("S and degs share keys") += 1;
            }
            if keep {
                sk.f.insert(id, StoredCopy { pred, vars: item.vars.to_vec() });
            }
        }
        sk.count += 1;
        let used = sk.space();
        sk.peak_space = sk.peak_space.max(used);
        if used > self.params.space_cap {
            return Err(Error::SpaceCapExceeded { used, cap: self.params.space_cap });
        }
        Ok(())
    }

    pub fn finish(self) -> Sketch {
        self.sketch
    }
}

/// Runs a whole stream through a fresh builder.
pub fn sketch_stream<'a>(
    stream: impl IntoIterator<Item = StreamItem<'a>>,
    header: StreamHeader,
    params: &Params,
    tape: RandomTape,
) -> Result<Sketch> {
    let mut builder = SketchBuilder::new(header, params, tape)?;
    for item in stream {
        builder.push(item)?;
    }
    Ok(builder.finish())
}
