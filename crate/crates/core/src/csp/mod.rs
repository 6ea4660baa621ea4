//! Constraint satisfaction instances: predicates, constraints, assignments,
//! exact evaluation and the input simplifications applied before estimation.

mod exact;
mod format;
mod simplify;

use std::collections::HashMap;
use std::fmt;

use num::{BigInt, BigRational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use exact::exact_val;
pub use format::{parse_instance, write_instance};
pub use simplify::{
    pad_arity, recombine_estimate, split_trivial, subsample_constraints, TrivialSplit,
};

/// Exact rational used for values and LP solutions.
pub type Rational = BigRational;

/// Largest `|Σ|^n` that [`brute_force_val`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

pub(crate) fn ratio(num: usize, den: usize) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Symbols are identified with `0..size`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 || size > u8::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "alphabet size must be in 2..=255, got {size}"
            )));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

/// A boolean predicate over `Σ^arity`, stored as a dense truth table in
/// lexicographic tuple order (last coordinate varies fastest).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Predicate {
    arity: usize,
    sigma: usize,
    table: Vec<bool>,
}

impl Predicate {
    pub fn new(arity: usize, sigma: usize, table: Vec<bool>) -> Result<Self> {
        if arity == 0 {
            return Err(Error::InvalidPredicate("arity must be positive".into()));
        }
        let expected = table_len(sigma, arity)
            .ok_or_else(|| Error::InvalidPredicate(format!("|Σ|^k overflows for k = {arity}")))?;
        if table.len() != expected {
            return Err(Error::InvalidPredicate(format!(
                "table has {} entries, expected {}^{} = {}",
                table.len(),
                sigma,
                arity,
                expected
            )));
        }
        Ok(Self { arity, sigma, table })
    }

    pub fn from_fn(arity: usize, sigma: usize, f: impl Fn(&[usize]) -> bool) -> Result<Self> {
        let len = table_len(sigma, arity)
            .ok_or_else(|| Error::InvalidPredicate(format!("|Σ|^k overflows for k = {arity}")))?;
        let mut tuple = vec![0usize; arity];
        let table = (0..len)
            .map(|idx| {
                decode_tuple(idx, sigma, &mut tuple);
                f(&tuple)
            })
            .collect();
        Self::new(arity, sigma, table)
    }

    /// Binary XOR, the Max-CUT predicate.
    pub fn xor() -> Self {
        Self::from_fn(2, 2, |b| b[0] != b[1]).expect("valid table")
    }

    /// Satisfied only by `(1, 0)`: a directed cut edge.
    pub fn dicut() -> Self {
        Self::from_fn(2, 2, |b| b[0] == 1 && b[1] == 0).expect("valid table")
    }

    pub fn constant(arity: usize, sigma: usize, value: bool) -> Result<Self> {
        Self::from_fn(arity, sigma, |_| value)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn table(&self) -> &[bool] {
        &self.table
    }

    pub fn trivially_true(&self) -> bool {
        self.table.iter().all(|&b| b)
    }

    pub fn trivially_false(&self) -> bool {
        self.table.iter().all(|&b| !b)
    }

    pub fn is_trivial(&self) -> bool {
        self.trivially_true() || self.trivially_false()
    }

    /// Table index of a tuple.
    pub fn index_of<T: Copy + Into<usize>>(&self, tuple: &[T]) -> usize {
        debug_assert_eq!(tuple.len(), self.arity);
        tuple.iter().fold(0, |acc, &s| acc * self.sigma + s.into())
    }

    pub fn eval<T: Copy + Into<usize>>(&self, tuple: &[T]) -> bool {
        self.table[self.index_of(tuple)]
    }

    /// Number of tuples in the table, `|Σ|^arity`.
    pub fn num_tuples(&self) -> usize {
        self.table.len()
    }

    /// Writes the tuple with table index `idx` into `out`.
    pub fn tuple(&self, idx: usize, out: &mut [usize]) {
        decode_tuple(idx, self.sigma, out)
    }

    pub fn bitstring(&self) -> String {
        self.table.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

pub(crate) fn table_len(sigma: usize, arity: usize) -> Option<usize> {
    sigma.checked_pow(u32::try_from(arity).ok()?)
}

fn decode_tuple(mut idx: usize, sigma: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % sigma;
        idx /= sigma;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredId(pub u32);

impl fmt::Display for PredId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Deduplicating store of predicates; identical tables share one id.
#[derive(Clone, Debug, Default)]
pub struct PredicateRegistry {
    preds: Vec<Predicate>,
    index: HashMap<Predicate, PredId>,
}

impl PredicateRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, pred: Predicate) -> PredId {
        if let Some(&id) = self.index.get(&pred) {
            return id;
        }
        let id = PredId(self.preds.len() as u32);
        self.index.insert(pred.clone(), id);
        self.preds.push(pred);
        id
    }

    pub fn get(&self, id: PredId) -> &Predicate {
        &self.preds[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PredId, &Predicate)> {
        self.preds
            .iter()
            .enumerate()
            .map(|(i, p)| (PredId(i as u32), p))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub vars: Vec<u32>,
    pub pred: PredId,
}

/// A CSP instance. Constraint order is the stream order.
#[derive(Clone, Debug)]
pub struct Instance {
    n: usize,
    alphabet: Alphabet,
    preds: PredicateRegistry,
    constraints: Vec<Constraint>,
}

impl Instance {
    pub fn new(n: usize, alphabet: Alphabet) -> Self {
        Self {
            n,
            alphabet,
            preds: PredicateRegistry::new(),
            constraints: Vec::new(),
        }
    }

    /// Builds an instance from `(predicate, vars)` pairs, interning predicates.
    pub fn from_constraints(
        n: usize,
        alphabet: Alphabet,
        constraints: impl IntoIterator<Item = (Predicate, Vec<u32>)>,
    ) -> Result<Self> {
        let mut inst = Self::new(n, alphabet);
        for (pred, vars) in constraints {
            let id = inst.intern(pred)?;
            inst.push(id, vars)?;
        }
        Ok(inst)
    }

    pub fn intern(&mut self, pred: Predicate) -> Result<PredId> {
        if pred.sigma() != self.alphabet.size() {
            return Err(Error::InvalidPredicate(format!(
                "predicate alphabet {} does not match instance alphabet {}",
                pred.sigma(),
                self.alphabet.size()
            )));
        }
        Ok(self.preds.intern(pred))
    }

    pub fn push(&mut self, pred: PredId, vars: Vec<u32>) -> Result<()> {
        let p = self
            .preds
            .preds
            .get(pred.0 as usize)
            .ok_or_else(|| Error::InvalidPredicate(format!("unknown predicate id {pred}")))?;
        if vars.len() != p.arity() {
            return Err(Error::InvalidPredicate(format!(
                "predicate {pred} has arity {} but {} variables were given",
                p.arity(),
                vars.len()
            )));
        }
        if let Some(&v) = vars.iter().find(|&&v| v as usize >= self.n) {
            return Err(Error::VariableOutOfRange { var: v as usize, n: self.n });
        }
        self.constraints.push(Constraint { vars, pred });
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn sigma(&self) -> usize {
        self.alphabet.size()
    }

    /// Largest constraint arity (0 for an empty instance).
    pub fn k(&self) -> usize {
        self.constraints
            .iter()
            .map(|c| c.vars.len())
            .max()
            .unwrap_or(0)
    }

    pub fn predicates(&self) -> &PredicateRegistry {
        &self.preds
    }

    pub fn predicate(&self, id: PredId) -> &Predicate {
        self.preds.get(id)
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn is_satisfied(&self, c: &Constraint, values: &[u8]) -> bool {
        let p = self.preds.get(c.pred);
        let idx = c
            .vars
            .iter()
            .fold(0usize, |acc, &v| acc * p.sigma() + values[v as usize] as usize);
        p.table()[idx]
    }

    pub fn satisfied_count(&self, tau: &Assignment) -> Result<usize> {
        self.check_assignment(tau)?;
        Ok(self
            .constraints
            .iter()
            .filter(|c| self.is_satisfied(c, &tau.values))
            .count())
    }

    fn check_assignment(&self, tau: &Assignment) -> Result<()> {
        if tau.values.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: tau.values.len(),
            });
        }
        if let Some((var, &value)) = tau
            .values
            .iter()
            .enumerate()
            .find(|(_, &s)| s as usize >= self.sigma())
        {
            return Err(Error::SymbolOutOfRange {
                var,
                value: value as usize,
                sigma: self.sigma(),
            });
        }
        Ok(())
    }

    /// Per-variable degree; a constraint repeating a variable counts once.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for c in &self.constraints {
            for (t, &v) in c.vars.iter().enumerate() {
                if !c.vars[..t].contains(&v) {
                    deg[v as usize] += 1;
                }
            }
        }
        deg
    }

    /// For each variable, the distinct constraints containing it.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (i, c) in self.constraints.iter().enumerate() {
            for (t, &v) in c.vars.iter().enumerate() {
                if !c.vars[..t].contains(&v) {
                    adj[v as usize].push(i);
                }
            }
        }
        adj
    }
}

/// A full assignment `V → Σ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub values: Vec<u8>,
}

impl Assignment {
    pub fn new(values: Vec<u8>) -> Self {
        Self { values }
    }
}

impl From<Vec<u8>> for Assignment {
    fn from(values: Vec<u8>) -> Self {
        Self { values }
    }
}

/// Fraction of constraints satisfied by `tau`.
pub fn evaluate(inst: &Instance, tau: &Assignment) -> Result<Rational> {
    if inst.m() == 0 {
        return Err(Error::EmptyInstance);
    }
    let sat = inst.satisfied_count(tau)?;
    Ok(ratio(sat, inst.m()))
}

/// Exact optimum by enumerating all `|Σ|^n` assignments.
///
/// Assignments are visited in reflected mixed-radix Gray order, so each step
/// changes one variable and only its adjacent constraints are re-evaluated.
pub fn brute_force_val(inst: &Instance) -> Result<Rational> {
    if inst.m() == 0 {
        return Err(Error::EmptyInstance);
    }
    let sigma = inst.sigma();
    let total = (sigma as u128).checked_pow(inst.n() as u32);
    match total {
        Some(t) if t <= BRUTE_FORCE_LIMIT => {}
        _ => {
            return Err(Error::TooLarge {
                what: "assignment space |Σ|^n",
                size: total.unwrap_or(u128::MAX),
                limit: BRUTE_FORCE_LIMIT,
            })
        }
    }
    Ok(ratio(brute_force_count(inst), inst.m()))
}

/// Maximum number of simultaneously satisfiable constraints, by enumeration.
pub(crate) fn brute_force_count(inst: &Instance) -> usize {
    let n = inst.n();
    let sigma = inst.sigma() as i32;
    let adj = inst.adjacency();
    let cons = inst.constraints();
    let mut values = vec![0u8; n];
    let mut sat: Vec<bool> = cons.iter().map(|c| inst.is_satisfied(c, &values)).collect();
    let mut count = sat.iter().filter(|&&s| s).count();
    let mut best = count;
    let mut dir = vec![1i32; n];
    loop {
        let mut j = 0;
        while j < n {
            let next = values[j] as i32 + dir[j];
            if (0..sigma).contains(&next) {
                break;
            }
            dir[j] = -dir[j];
            j += 1;
        }
        if j == n {
            break;
        }
        values[j] = (values[j] as i32 + dir[j]) as u8;
        for &ci in &adj[j] {
            let now = inst.is_satisfied(&cons[ci], &values);
            if now != sat[ci] {
                if now {
                    count += 1;
                } else {
                    count -= 1;
                }
                sat[ci] = now;
            }
        }
        best = best.max(count);
    }
    best
}

/// Number of constraints adjacent to `v`.
pub fn degree(inst: &Instance, v: usize) -> Result<usize> {
    if v >= inst.n() {
        return Err(Error::VariableOutOfRange { var: v, n: inst.n() });
    }
    Ok(inst
        .constraints()
        .iter()
        .filter(|c| c.vars.contains(&(v as u32)))
        .count())
}

/// Nearest `f64`, or NaN when out of range.
pub fn rational_value(r: &Rational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}
