use std::collections::HashMap;

use serde_json::json;

use crate::csp::Instance;
use crate::error::{Error, Result};
use crate::hash::KWiseHash;
use crate::local::ALocMap;
use crate::reduced::{ConstraintCopyId, CopyKey, ReducedInstance};
use crate::tape::RandomTape;

use super::aggregate::{aggregate, degree_map, AggregateReport};
use super::config::{EstimatorConfig, Params};
use super::policy::{compute_tiering, Tiering};
use super::sample::{offline_sample, sample_cset, sample_hash};
use super::trevisan::reduce_with;

/// Every intermediate of one offline run, kept for diagnostics.
#[derive(Clone, Debug)]
pub struct OfflineRun {
    pub params: Params,
    pub tiering: Tiering,
    pub reduced: ReducedInstance,
    pub hash: KWiseHash,
    pub sampled: ReducedInstance,
    pub degs: HashMap<CopyKey, usize>,
    pub cset: Vec<ConstraintCopyId>,
    pub report: AggregateReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimate {
    pub out: f64,
    pub vtilde: f64,
    pub params: Params,
    pub report: AggregateReport,
}

impl Estimate {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "out": self.out,
            "vtilde": self.vtilde,
            "report": self.report,
            "params": self.params,
        })
    }
}

pub(crate) fn params_for(inst: &Instance, cfg: &EstimatorConfig) -> Result<Params> {
    if inst.m() == 0 {
        return Err(Error::EmptyInstance);
    }
    cfg.resolve(inst.n(), inst.k(), inst.sigma(), Some(inst.m()))
}

/// Tiering, reduction, two-tier sampling, center sampling and aggregation.
pub fn offline_run(inst: &Instance, params: &Params, aloc: &dyn ALocMap) -> Result<OfflineRun> {
    let tape = RandomTape::new(params.seed);
    let tiering = compute_tiering(inst, params, &tape);
    let reduced = reduce_with(inst, &tiering, params, &tape)?;
    let hash = sample_hash(params, &tape);
    let mask = offline_sample(&reduced, params, &hash, &tape);
    let sampled = reduced.induced(&mask);
    let degs = degree_map(&reduced);
    let cset = sample_cset(inst.m(), params.b, params, &tape);
    let report = aggregate(&sampled, &degs, &cset, params, aloc)?;
    Ok(OfflineRun { params: params.clone(), tiering, reduced, hash, sampled, degs, cset, report })
}

/// `α/(1 + 2|Σ|^k ε) · Out` from the offline pipeline.
pub fn offline_estimate(inst: &Instance, cfg: &EstimatorConfig, aloc: &dyn ALocMap) -> Result<Estimate> {
    let params = params_for(inst, cfg)?;
    let scale = params.output_scale()?;
    let run = offline_run(inst, &params, aloc)?;
    Ok(Estimate { out: run.report.out, vtilde: scale * run.report.out, params, report: run.report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{Alphabet, Predicate};
    use crate::local::LpALoc;
    use crate::reduction::aggregate::exhaustive_mean;

    fn cfg() -> EstimatorConfig {
        EstimatorConfig { b: Some(2), c_exp: 0.0, alpha: Some(0.5), epsilon: 0.25, cset_size: Some(1000), ..Default::default() }
    }

    #[test]
    fn all_false_is_zero() {
        let f = Predicate::constant(2, 2, false).unwrap();
        let inst = Instance::from_constraints(3, Alphabet::new(2).unwrap(), vec![(f.clone(), vec![0, 1]), (f, vec![1, 2])]).unwrap();
        assert_eq!(offline_estimate(&inst, &cfg(), &LpALoc).unwrap().vtilde, 0.0);
    }

    #[test]
    fn degenerate_parameters_give_the_scaled_mean() {
        let inst = Instance::from_constraints(
            4,
            Alphabet::new(2).unwrap(),
            vec![(Predicate::xor(), vec![0, 1]), (Predicate::xor(), vec![1, 2]), (Predicate::xor(), vec![2, 0]), (Predicate::dicut(), vec![2, 3])],
        )
        .unwrap();
        let params = params_for(&inst, &cfg()).unwrap();
        assert!(params.cset_clamped);
        let run = offline_run(&inst, &params, &LpALoc).unwrap();
        let mean = exhaustive_mean(&run.reduced, &params, &LpALoc).unwrap();
        let est = offline_estimate(&inst, &cfg(), &LpALoc).unwrap();
        assert_eq!(est.out, mean);
        assert_eq!(est.vtilde, 0.5 / 3.0 * mean);
    }

    #[test]
    fn alpha_is_required() {
        let inst = Instance::from_constraints(2, Alphabet::new(2).unwrap(), vec![(Predicate::xor(), vec![0, 1])]).unwrap();
        let c = EstimatorConfig { alpha: None, ..cfg() };
        assert!(matches!(offline_estimate(&inst, &c, &LpALoc), Err(Error::InvalidParameter(_))));
    }
}
