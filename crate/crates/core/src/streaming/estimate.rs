use crate::error::Result;
use crate::local::ALocMap;
use crate::reduced::ConstraintCopyId;
use crate::reduction::{aggregate, AggregateReport, Estimate, EstimatorConfig, Params};
use crate::tape::RandomTape;

use super::reduce::{streaming_reduction, StreamReduction};
use super::sketch::{sketch_stream, Sketch, StreamHeader, StreamItem};

#[derive(Clone, Debug)]
pub struct StreamRun {
    pub params: Params,
    pub sketch: Sketch,
    pub reduction: StreamReduction,
    pub cset: Vec<ConstraintCopyId>,
    pub report: AggregateReport,
}

/// Sketch, reduce, and aggregate over the reservoir's centers.
pub fn stream_run<'a>(
    stream: impl IntoIterator<Item = StreamItem<'a>>,
    header: StreamHeader,
    params: &Params,
    tape: RandomTape,
    aloc: &dyn ALocMap,
) -> Result<StreamRun> {
    let sketch = sketch_stream(stream, header, params, tape)?;
    let reduction = streaming_reduction(&sketch, params, &tape)?;
    let mut cset = sketch.reservoir.items().to_vec();
    cset.sort_unstable();
    let report = aggregate(&reduction.instance, &reduction.degs, &cset, params, aloc)?;
    Ok(StreamRun { params: params.clone(), sketch, reduction, cset, report })
}

/// One-pass estimate `α/(1 + 2|Σ|^k ε) · Out`.
pub fn streaming_estimate<'a>(
    stream: impl IntoIterator<Item = StreamItem<'a>>,
    header: StreamHeader,
    cfg: &EstimatorConfig,
    aloc: &dyn ALocMap,
) -> Result<Estimate> {
    let params = cfg.resolve(header.n, header.k, header.alphabet.size(), None)?;
    let scale = params.output_scale()?;
    let run = stream_run(stream, header, &params, RandomTape::new(params.seed), aloc)?;
    Ok(Estimate { out: run.report.out, vtilde: scale * run.report.out, params, report: run.report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{Alphabet, Instance, Predicate};
    use crate::local::LpALoc;
    use crate::reduction::offline_estimate;
    use crate::streaming::sketch::instance_stream;

    #[test]
    fn all_false_stream_is_zero() {
        let f = Predicate::constant(2, 2, false).unwrap();
        let inst = Instance::from_constraints(3, Alphabet::new(2).unwrap(), vec![(f.clone(), vec![0, 1]), (f, vec![1, 2])]).unwrap();
        let cfg = EstimatorConfig { b: Some(2), alpha: Some(0.5), ..Default::default() };
        let e = streaming_estimate(instance_stream(&inst), StreamHeader::of(&inst), &cfg, &LpALoc).unwrap();
        assert_eq!(e.vtilde, 0.0);
    }

    #[test]
    fn degenerate_parameters_match_offline() {
        let inst = Instance::from_constraints(
            5,
            Alphabet::new(2).unwrap(),
            vec![
                (Predicate::xor(), vec![0, 1]),
                (Predicate::dicut(), vec![1, 2]),
                (Predicate::xor(), vec![2, 0]),
                (Predicate::xor(), vec![3, 4]),
            ],
        )
        .unwrap();
        for seed in 0..10 {
            let cfg = EstimatorConfig {
                b: Some(2),
                c_exp: 0.0,
                q_exp: 3.0,
                alpha: Some(0.5),
                cset_size: Some(8),
                seed,
                ..Default::default()
            }
            .coupled();
            let on = streaming_estimate(instance_stream(&inst), StreamHeader::of(&inst), &cfg, &LpALoc).unwrap();
            let off = offline_estimate(&inst, &cfg, &LpALoc).unwrap();
            assert_eq!(on.vtilde.to_bits(), off.vtilde.to_bits());
        }
    }
}
