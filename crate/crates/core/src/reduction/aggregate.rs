use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::{ball_is_fully_sampled, count_dependencies, extract_ball, ALocMap};
use crate::reduced::{ConstraintCopyId, CopyKey, ReducedInstance};

use super::config::Params;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub out: f64,
    pub centers: usize,
    /// Centers found in the sampled instance.
    pub present: usize,
    pub fully_sampled: usize,
    /// Sampled constraints turned into dummies by degree bounding.
    pub dummied: usize,
    /// Largest dependency count among fully sampled balls.
    pub max_dependencies: usize,
}

/// Degree-bounds the sampled instance against the recorded full degrees
/// and returns it with the adjusted records.
pub fn bound_sampled(
    sampled: &ReducedInstance,
    degs: &HashMap<CopyKey, usize>,
    cap: usize,
) -> Result<(ReducedInstance, HashMap<CopyKey, usize>)> {
    let mut bdd = HashMap::with_capacity(sampled.copies().len());
    let mut over = Vec::new();
    for (idx, c) in sampled.copies().iter().enumerate() {
        let d = *degs
            .get(&c.key())
            .ok_or(Error::MissingDegree { parent: c.parent, copy: c.copy_index })?;
        if d > cap {
            over.push(idx);
            bdd.insert(c.key(), 0);
        } else {
            bdd.insert(c.key(), d);
        }
    }
    let mut dummies: Vec<usize> = over
        .iter()
        .flat_map(|&i| sampled.adjacent(i).iter().map(|&c| c as usize))
        .collect();
    dummies.sort_unstable();
    dummies.dedup();
    for &ci in &dummies {
        let mut vars = sampled.constraints()[ci].vars.clone();
        vars.sort_unstable();
        vars.dedup();
        for v in vars {
            let key = sampled.copies()[v as usize].key();
            if let Some(d) = bdd.get_mut(&key) {
                *d = d.saturating_sub(1);
            }
        }
    }
    Ok((sampled.with_dummies(&dummies), bdd))
}

/// Averages `a_loc(ball) · R^T` over the centers whose balls were fully
/// stored; every other center contributes zero.
pub fn aggregate(
    sampled: &ReducedInstance,
    degs: &HashMap<CopyKey, usize>,
    cset: &[ConstraintCopyId],
    params: &Params,
    aloc: &dyn ALocMap,
) -> Result<AggregateReport> {
    let (bounded, bdd) = bound_sampled(sampled, degs, params.cap)?;
    let mut report = AggregateReport {
        centers: cset.len(),
        dummied: bounded.num_dummies() - sampled.num_dummies(),
        ..Default::default()
    };
    if cset.is_empty() {
        return Ok(report);
    }
    let mut total = 0.0;
    for &id in cset {
        let Some(pos) = bounded.constraint_position(id) else {
            continue;
        };
        report.present += 1;
        let ball = extract_ball(&bounded, id, params.radius)?;
        if !ball_is_fully_sampled(&ball, |k| bdd.get(&k).copied())? {
            continue;
        }
        report.fully_sampled += 1;
        let t = count_dependencies(&ball)?;
        report.max_dependencies = report.max_dependencies.max(t);
        if bounded.constraints()[pos].dummy {
            continue;
        }
        let value = aloc.evaluate(&ball)?;
        total += value * (params.hash_range as f64).powi(t as i32);
    }
    report.out = total / cset.len() as f64;
    Ok(report)
}

/// Full degree of every copy, keyed by copy.
pub fn degree_map(red: &ReducedInstance) -> HashMap<CopyKey, usize> {
    red.copies()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.key(), red.degree(i)))
        .collect()
}

/// The exhaustive target `(1/(mB)) Σ_{i,l} a_loc(N(i, r))` on the bounded
/// instance.
pub fn exhaustive_mean(red: &ReducedInstance, params: &Params, aloc: &dyn ALocMap) -> Result<f64> {
    let (bounded, _) = red.bound_degree(params.cap);
    let mut total = 0.0;
    for c in bounded.constraints() {
        if c.dummy {
            continue;
        }
        total += aloc.evaluate(&extract_ball(&bounded, c.id, params.radius)?)?;
    }
    Ok(total / (red.m() * red.b()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::LpALoc;
    use crate::reduced::tests::{xor_path, xor_star};
    use crate::reduced::Tier;
    use crate::reduction::EstimatorConfig;

    fn params(range: u64, cap: usize) -> Params {
        let mut p = EstimatorConfig { b: Some(1), hash_range: Some(range), ..Default::default() }
            .resolve(16, 2, 2, None)
            .unwrap();
        p.cap = cap;
        p
    }

    fn all(red: &ReducedInstance) -> Vec<ConstraintCopyId> {
        red.constraints().iter().map(|c| c.id).collect()
    }

    #[test]
    fn nothing_sampled_gives_zero() {
        let red = xor_path(4, Tier::Low);
        let degs = degree_map(&red);
        let empty = red.induced(&[false; 5]);
        let r = aggregate(&empty, &degs, &all(&red), &params(2, 10), &LpALoc).unwrap();
        assert_eq!(r.out, 0.0);
        assert_eq!(r.present, 0);
    }

    #[test]
    fn everything_sampled_with_unit_range() {
        let red = xor_path(4, Tier::Low);
        let p = params(1, 10);
        let r = aggregate(&red, &degree_map(&red), &all(&red), &p, &LpALoc).unwrap();
        assert_eq!(r.out, 1.0);
        assert_eq!(r.fully_sampled, 4);
        assert_eq!(exhaustive_mean(&red, &p, &LpALoc).unwrap(), 1.0);
    }

    #[test]
    fn scale_factor_is_range_to_the_dependencies() {
        // r = 1 on a 2-edge path: 3 distinct low parents.
        let red = xor_path(2, Tier::Low);
        let mut p = params(2, 10);
        p.radius = 1;
        let r = aggregate(&red, &degree_map(&red), &[ConstraintCopyId::new(0, 0)], &p, &LpALoc).unwrap();
        assert_eq!(r.max_dependencies, 3);
        assert_eq!(r.out, 8.0);
    }

    #[test]
    fn over_cap_copies_dummy_their_constraints() {
        let star = xor_star(5);
        let p = params(1, 4);
        let r = aggregate(&star, &degree_map(&star), &all(&star), &p, &LpALoc).unwrap();
        assert_eq!(r.dummied, 5);
        assert_eq!(r.out, 0.0);
        let (bounded, bdd) = bound_sampled(&star, &degree_map(&star), 4).unwrap();
        assert!(bdd.values().all(|&d| d == 0));
        assert_eq!(bounded.num_dummies(), 5);
    }

    #[test]
    fn missing_record_is_an_error() {
        let red = xor_path(2, Tier::Low);
        assert!(matches!(
            aggregate(&red, &HashMap::new(), &all(&red), &params(1, 4), &LpALoc),
            Err(Error::MissingDegree { .. })
        ));
    }
}
