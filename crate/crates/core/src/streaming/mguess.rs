use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::local::ALocMap;
use crate::reduction::{aggregate, Estimate, EstimatorConfig, Params};
use crate::tape::{Namespace, RandomTape};

use super::reduce::streaming_reduction;
use super::sketch::{SketchBuilder, StreamHeader, StreamItem};

/// Status of one guessing copy at the end of the stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelStatus {
    pub level: usize,
    /// Constraint keep probability `min(1, m*/2^level)`.
    pub keep_prob: f64,
    pub alive: bool,
    pub kept: usize,
    pub peak_space: usize,
}

#[derive(Clone, Debug)]
pub struct MGuessOutcome {
    pub m: usize,
    pub selected: usize,
    pub estimate: Estimate,
    pub levels: Vec<LevelStatus>,
    /// Largest total live space across copies at any point.
    pub peak_total_space: usize,
}

/// Constraint budget `⌈n/ε²⌉` each copy sparsifies down to.
pub fn target_m(n: usize, epsilon: f64) -> usize {
    (n as f64 / (epsilon * epsilon)).ceil() as usize
}

/// `⌊log2 m⌋`, the copy whose interval holds `m`.
pub fn level_of(m: usize) -> usize {
    assert!(m > 0);
    (usize::BITS - 1 - m.leading_zeros()) as usize
}

fn keep_prob(level: usize, target: usize) -> f64 {
    (target as f64 / 2f64.powi(level as i32)).min(1.0)
}

struct Copy<'p> {
    level: usize,
    prob: f64,
    tape: RandomTape,
    builder: Option<SketchBuilder<'p>>,
    kept: usize,
    peak: usize,
}

/// Runs one sketch per guess `m ∈ [2^i, 2^{i+1})`, each keeping every
/// constraint with probability `min(1, m*/2^i)`; copies over their space cap
/// are dropped, and the copy whose interval holds the final `m` reports.
/// With `known_m` only that copy runs.
pub fn m_guess_wrapper<'a>(
    stream: impl IntoIterator<Item = StreamItem<'a>>,
    header: StreamHeader,
    cfg: &EstimatorConfig,
    aloc: &dyn ALocMap,
    known_m: Option<usize>,
    levels: Option<usize>,
) -> Result<MGuessOutcome> {
    let params: Params = cfg.resolve(header.n, header.k, header.alphabet.size(), None)?;
    let scale = params.output_scale()?;
    let target = target_m(header.n, params.epsilon);
    let base = RandomTape::new(params.seed);
    let range: Vec<usize> = match known_m {
        Some(0) => return Err(Error::EmptyInstance),
        Some(m) => vec![level_of(m)],
        None => {
            let count = levels.unwrap_or_else(|| {
                (2 + ((header.n.max(2) as f64).log2() * header.k as f64).ceil() as usize).min(48)
            });
            (0..count).collect()
        }
    };
    let mut copies = range
        .iter()
        .map(|&level| {
            let tape = base.derive(level as u64);
            Ok(Copy {
                level,
                prob: keep_prob(level, target),
                tape,
                builder: Some(SketchBuilder::new(header, &params, tape)?),
                kept: 0,
                peak: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut m = 0usize;
    let mut peak_total = 0usize;
    for item in stream {
        m += 1;
        let mut total = 0;
        for c in copies.iter_mut() {
            let Some(b) = c.builder.as_mut() else { continue };
            if c.tape.bernoulli(Namespace::Subsample, &[item.index as u64], c.prob) {
                c.kept += 1;
                match b.push(item) {
                    Ok(()) => {}
                    Err(Error::SpaceCapExceeded { .. }) => {
                        c.peak = c.peak.max(b.space());
                        c.builder = None;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
            let used = b.space();
            c.peak = c.peak.max(used);
            total += used;
        }
        peak_total = peak_total.max(total);
    }
    if m == 0 {
        return Err(Error::EmptyInstance);
    }
    let statuses: Vec<LevelStatus> = copies
        .iter()
        .map(|c| LevelStatus { level: c.level, keep_prob: c.prob, alive: c.builder.is_some(), kept: c.kept, peak_space: c.peak })
        .collect();
    if statuses.iter().all(|s| !s.alive) {
        return Err(Error::AllCopiesTerminated);
    }
    let want = level_of(m);
    let Some(pos) = copies.iter().position(|c| c.level == want) else {
        return Err(Error::InvalidParameter(format!("stream length {m} is beyond the largest guess")));
    };
    let chosen = copies.swap_remove(pos);
    let Some(builder) = chosen.builder else {
        return Err(Error::SelectedCopyTerminated { m, lo: 1 << want, hi: 1 << (want + 1) });
    };
    let sketch = builder.finish();
    let reduction = streaming_reduction(&sketch, &params, &chosen.tape)?;
    let mut cset = sketch.reservoir.items().to_vec();
    cset.sort_unstable();
    let report = aggregate(&reduction.instance, &reduction.degs, &cset, &params, aloc)?;
    Ok(MGuessOutcome {
        m,
        selected: want,
        estimate: Estimate { out: report.out, vtilde: scale * report.out, params, report },
        levels: statuses,
        peak_total_space: peak_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::{Alphabet, Instance, Predicate};
    use crate::local::LpALoc;
    use crate::streaming::sketch::instance_stream;

    #[test]
    fn intervals() {
        assert_eq!(level_of(1), 0);
        assert_eq!(level_of(1000), 9);
        assert_eq!(level_of(1024), 10);
    }

    fn cycle(n: u32, m: usize) -> Instance {
        Instance::from_constraints(
            n as usize,
            Alphabet::new(2).unwrap(),
            (0..m as u32).map(|i| (Predicate::xor(), vec![i % n, (i * 7 + 1) % n])),
        )
        .unwrap()
    }

    fn cfg() -> EstimatorConfig {
        EstimatorConfig { b: Some(1), epsilon: 0.5, hash_range: Some(2), alpha: Some(0.5), t_max: Some(2), ..Default::default() }
    }

    #[test]
    fn selects_the_copy_holding_m() {
        let inst = cycle(200, 1000);
        let out = m_guess_wrapper(instance_stream(&inst), StreamHeader::of(&inst), &cfg(), &LpALoc, None, Some(21)).unwrap();
        assert_eq!(out.selected, 9);
        assert_eq!(out.levels.len(), 21);
        let cap = out.estimate.params.space_cap;
        assert!(out.peak_total_space <= (level_of(1000) + 2) * cap);
    }

    #[test]
    fn known_m_matches_the_selected_copy() {
        let inst = cycle(200, 1000);
        let a = m_guess_wrapper(instance_stream(&inst), StreamHeader::of(&inst), &cfg(), &LpALoc, None, Some(21)).unwrap();
        let b = m_guess_wrapper(instance_stream(&inst), StreamHeader::of(&inst), &cfg(), &LpALoc, Some(1000), None).unwrap();
        assert_eq!(b.levels.len(), 1);
        assert_eq!(a.estimate.out.to_bits(), b.estimate.out.to_bits());
    }

    #[test]
    fn over_cap_copies_are_dropped() {
        let inst = cycle(200, 1000);
        let c = EstimatorConfig { space_cap: Some(400), ..cfg() };
        match m_guess_wrapper(instance_stream(&inst), StreamHeader::of(&inst), &c, &LpALoc, None, Some(12)) {
            Ok(out) => assert!(out.levels.iter().any(|l| !l.alive)),
            Err(e) => assert!(matches!(e, Error::SelectedCopyTerminated { .. } | Error::AllCopiesTerminated)),
        }
    }
}
