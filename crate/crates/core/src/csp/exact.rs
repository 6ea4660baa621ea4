//! Exact optimum by max-sum variable elimination, for instances too large
//! to enumerate but with small induced width.

use std::collections::BTreeSet;

use super::{ratio, Instance, Rational};
use crate::error::{Error, Result};

/// Largest intermediate table `exact_val` will build.
pub const ELIMINATION_TABLE_LIMIT: u128 = 1 << 22;

#[derive(Clone, Debug)]
struct Factor {
    scope: Vec<u32>,
    table: Vec<u32>,
}

fn table_size(sigma: usize, width: usize) -> u128 {
    (sigma as u128).saturating_pow(width as u32)
}

fn combine(factors: &[Factor], scope: &[u32], drop: u32, sigma: usize) -> Factor {
    let strides: Vec<Vec<usize>> = factors
        .iter()
        .map(|f| {
            scope
                .iter()
                .map(|v| match f.scope.iter().position(|w| w == v) {
                    Some(p) => sigma.pow((f.scope.len() - 1 - p) as u32),
                    None => 0,
                })
                .collect()
        })
        .collect();
    let drop_pos = scope.iter().position(|&v| v == drop).expect("eliminated variable in scope");
    let out_scope: Vec<u32> = scope.iter().copied().filter(|&v| v != drop).collect();
    let out_len = sigma.pow(out_scope.len() as u32);
    let mut out = vec![0u32; out_len];
    let mut digits = vec![0usize; scope.len()];
    let total = sigma.pow(scope.len() as u32);
    for _ in 0..total {
        let sum: u32 = factors
            .iter()
            .zip(&strides)
            .map(|(f, st)| {
                let idx: usize = digits.iter().zip(st).map(|(d, s)| d * s).sum();
                f.table[idx]
            })
            .sum();
        let oidx = digits
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != drop_pos)
            .fold(0usize, |acc, (_, &d)| acc * sigma + d);
        out[oidx] = out[oidx].max(sum);
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < sigma {
                break;
            }
            *d = 0;
        }
    }
    Factor { scope: out_scope, table: out }
}

/// Maximum number of simultaneously satisfiable constraints.
pub(crate) fn exact_count(inst: &Instance) -> Result<usize> {
    let sigma = inst.sigma();
    let mut factors: Vec<Option<Factor>> = Vec::with_capacity(inst.m());
    for c in inst.constraints() {
        let scope: Vec<u32> = c.vars.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let size = table_size(sigma, scope.len());
        if size > ELIMINATION_TABLE_LIMIT {
            return Err(Error::TooLarge { what: "constraint table", size, limit: ELIMINATION_TABLE_LIMIT });
        }
        let p = inst.predicate(c.pred);
        let mut digits = vec![0usize; scope.len()];
        let mut table = Vec::with_capacity(size as usize);
        let mut tuple = vec![0usize; c.vars.len()];
        for _ in 0..size {
            for (t, v) in c.vars.iter().enumerate() {
                tuple[t] = digits[scope.iter().position(|w| w == v).unwrap()];
            }
            table.push(p.eval(&tuple) as u32);
            for d in digits.iter_mut().rev() {
                *d += 1;
                if *d < sigma {
                    break;
                }
                *d = 0;
            }
        }
        factors.push(Some(Factor { scope, table }));
    }

    let mut remaining: BTreeSet<u32> = factors
        .iter()
        .flatten()
        .flat_map(|f| f.scope.iter().copied())
        .collect();
    while !remaining.is_empty() {
        let mut best: Option<(usize, u32)> = None;
        for &v in &remaining {
            let mut union = BTreeSet::new();
            for f in factors.iter().flatten() {
                if f.scope.contains(&v) {
                    union.extend(f.scope.iter().copied());
                }
            }
            if best.is_none_or(|(w, _)| union.len() < w) {
                best = Some((union.len(), v));
            }
        }
        let (_, v) = best.expect("nonempty");
        let mut bucket = Vec::new();
        for slot in factors.iter_mut() {
            if slot.as_ref().is_some_and(|f| f.scope.contains(&v)) {
                bucket.push(slot.take().unwrap());
            }
        }
        let scope: Vec<u32> = bucket
            .iter()
            .flat_map(|f| f.scope.iter().copied())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let size = table_size(sigma, scope.len());
        if size > ELIMINATION_TABLE_LIMIT {
            return Err(Error::TooLarge { what: "elimination table", size, limit: ELIMINATION_TABLE_LIMIT });
        }
        factors.push(Some(combine(&bucket, &scope, v, sigma)));
        remaining.remove(&v);
    }
    Ok(factors.iter().flatten().map(|f| f.table[0] as usize).sum())
}

/// Exact `val(I)` without enumerating `|Σ|^n` assignments.
pub fn exact_val(inst: &Instance) -> Result<Rational> {
    if inst.m() == 0 {
        return Err(Error::EmptyInstance);
    }
    Ok(ratio(exact_count(inst)?, inst.m()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::tests::naive_val;
    use crate::csp::{brute_force_val, Alphabet, Predicate};
    use rand::{Rng, SeedableRng};

    #[test]
    fn matches_brute_force_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let sigma = rng.gen_range(2..=3);
            let n = rng.gen_range(1..=7);
            let mut inst = Instance::new(n, Alphabet::new(sigma).unwrap());
            for _ in 0..rng.gen_range(1..=10) {
                let k = rng.gen_range(1..=3);
                let table = (0..sigma.pow(k as u32)).map(|_| rng.gen_bool(0.5)).collect();
                let id = inst.intern(Predicate::new(k, sigma, table).unwrap()).unwrap();
                let vars = (0..k).map(|_| rng.gen_range(0..n as u32)).collect();
                inst.push(id, vars).unwrap();
            }
            assert_eq!(exact_val(&inst).unwrap(), brute_force_val(&inst).unwrap());
            assert_eq!(exact_val(&inst).unwrap(), naive_val(&inst));
        }
    }

    #[test]
    fn long_cycle_beyond_enumeration() {
        let n = 61;
        let mut inst = Instance::new(n, Alphabet::new(2).unwrap());
        let id = inst.intern(Predicate::xor()).unwrap();
        for v in 0..n as u32 {
            inst.push(id, vec![v, (v + 1) % n as u32]).unwrap();
        }
        assert_eq!(exact_val(&inst).unwrap(), ratio(60, 61));
    }
}
