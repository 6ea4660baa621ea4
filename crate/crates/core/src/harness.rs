//! Experiment orchestration: trials, JSON-lines records and summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::csp::{exact_val, Instance};
use crate::error::{Error, Result};
use crate::gen::{generate, GenSpec};
use crate::local::{ALocMap, CachedALoc, ExactValALoc, LpALoc};
use crate::lp::{render_rational, solve_basic_lp};
use crate::reduction::{offline_estimate, EstimatorConfig};
use crate::stats;
use crate::streaming::{coupled_run, instance_stream, stream_run, CouplingDiagnostics, StreamHeader};
use crate::tape::RandomTape;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Lp,
    Offline,
    Stream,
    Coupled,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "lp" => Ok(Mode::Lp),
            "offline" => Ok(Mode::Offline),
            "stream" => Ok(Mode::Stream),
            "coupled" => Ok(Mode::Coupled),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ALocKind {
    #[default]
    Lp,
    ExactVal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceSource {
    File(PathBuf),
    /// A fresh instance per trial, seeded by the trial seed.
    Generator(GenSpec),
    Inline(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub source: InstanceSource,
    pub config: EstimatorConfig,
    pub trials: usize,
    pub aloc: ALocKind,
    /// Record wall-clock time per trial; off by default so that records are
    /// reproducible byte for byte.
    pub timing: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lp: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stream: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space_peak: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    /// The headline number of the record for its mode.
    pub fn value(&self, mode: Mode) -> Option<f64> {
        let parse = |s: &Option<String>| s.as_deref().and_then(parse_ratio);
        match mode {
            Mode::Exact => parse(&self.exact),
            Mode::Lp => parse(&self.lp),
            Mode::Offline => self.offline,
            Mode::Stream | Mode::Coupled => self.stream.or(self.offline),
        }
    }
}

fn parse_ratio(s: &str) -> Option<f64> {
    let (p, q) = s.split_once('/')?;
    Some(p.parse::<f64>().ok()? / q.parse::<f64>().ok()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub trials: usize,
    pub errors: usize,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub match_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claim_failure_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clean_match_rate: Option<f64>,
    pub spec: ExperimentSpec,
}

fn load(source: &InstanceSource, seed: u64) -> Result<Instance> {
    match source {
        InstanceSource::File(path) => crate::csp::parse_instance(&std::fs::read_to_string(path)?),
        InstanceSource::Inline(text) => crate::csp::parse_instance(text),
        InstanceSource::Generator(g) => generate(&GenSpec { seed, ..g.clone() }),
    }
}

fn run_trial(spec: &ExperimentSpec, trial: usize, shared: Option<&Instance>, aloc: &dyn ALocMap) -> TrialRecord {
    let seed = spec.config.seed.wrapping_add(trial as u64);
    let mut rec = TrialRecord { trial, seed, ..Default::default() };
    let started = Instant::now();
    let result = (|| -> Result<()> {
        let owned;
        let inst = match shared {
            Some(i) => i,
            None => {
                owned = load(&spec.source, seed)?;
                &owned
            }
        };
        rec.n = inst.n();
        rec.m = inst.m();
        let cfg = EstimatorConfig { seed, ..spec.config.clone() };
        match spec.mode {
            Mode::Exact => rec.exact = Some(render_rational(&exact_val(inst)?)),
            Mode::Lp => {
                let lp = solve_basic_lp(inst)?.objective;
                if inst.n() <= 20 {
                    let ex = exact_val(inst)?;
                    if ex > lp {
                        return Err(Error::InvalidParameter(format!(
                            "relaxation violated: exact {} > lp {}",
                            render_rational(&ex),
                            render_rational(&lp)
                        )));
                    }
                    rec.exact = Some(render_rational(&ex));
                }
                rec.lp = Some(render_rational(&lp));
            }
            Mode::Offline => rec.offline = Some(offline_estimate(inst, &cfg, aloc)?.vtilde),
            Mode::Stream => {
                let header = StreamHeader::of(inst);
                let params = cfg.resolve(header.n, header.k, header.alphabet.size(), None)?;
                let scale = params.output_scale()?;
                let run = stream_run(instance_stream(inst), header, &params, RandomTape::new(seed), aloc)?;
                rec.stream = Some(scale * run.report.out);
                rec.space_peak = Some(run.sketch.peak_space);
            }
            Mode::Coupled => {
                let out = coupled_run(inst, &cfg, aloc)?;
                rec.offline = Some(out.vtilde_off);
                rec.stream = out.vtilde_on;
                rec.matched = Some(out.matched);
                rec.coupling = Some(out.diagnostics);
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        rec.error = Some(e.to_string());
    }
    if spec.timing {
        rec.wall_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }
    rec
}

/// Runs every trial (in parallel, recorded in trial order) and summarises.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(Vec<TrialRecord>, Summary)> {
    if spec.trials == 0 {
        return Err(Error::InvalidParameter("trials must be ≥ 1".into()));
    }
    let shared = match &spec.source {
        InstanceSource::Generator(_) => None,
        other => Some(load(other, spec.config.seed)?),
    };
    let lp = CachedALoc::new(LpALoc);
    let exact = ExactValALoc;
    let aloc: &dyn ALocMap = match spec.aloc {
        ALocKind::Lp => &lp,
        ALocKind::ExactVal => &exact,
    };
    let records: Vec<TrialRecord> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, t, shared.as_ref(), aloc))
        .collect();
    Ok((records.clone(), summarize(spec, &records)))
}

pub fn summarize(spec: &ExperimentSpec, records: &[TrialRecord]) -> Summary {
    let values: Vec<f64> = records.iter().filter_map(|r| r.value(spec.mode)).collect();
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    let (mut match_rate, mut claim_failure_rate, mut clean_match_rate) = (None, None, None);
    if spec.mode == Mode::Coupled {
        let runs: Vec<&TrialRecord> = records.iter().filter(|r| r.matched.is_some()).collect();
        if !runs.is_empty() {
            let total = runs.len() as f64;
            match_rate = Some(runs.iter().filter(|r| r.matched == Some(true)).count() as f64 / total);
            let failing = runs.iter().filter(|r| r.coupling.as_ref().is_some_and(|d| d.claim_failure)).count();
            claim_failure_rate = Some(failing as f64 / total);
            let clean: Vec<_> = runs.iter().filter(|r| r.coupling.as_ref().is_some_and(|d| !d.claim_failure)).collect();
            if !clean.is_empty() {
                clean_match_rate =
                    Some(clean.iter().filter(|r| r.matched == Some(true)).count() as f64 / clean.len() as f64);
            }
        }
    }
    Summary {
        mode: spec.mode,
        trials: records.len(),
        errors,
        mean: (!values.is_empty()).then(|| stats::mean(&values)),
        stderr: (values.len() > 1).then(|| stats::stderr(&values)),
        match_rate,
        claim_failure_rate,
        clean_match_rate,
        spec: spec.clone(),
    }
}

/// Writes one JSON record per line to `path` and the summary next to it as
/// `<path>.summary.json`.
pub fn write_results(path: &Path, records: &[TrialRecord], summary: &Summary) -> Result<PathBuf> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Io(e.to_string()))?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    let mut summary_path = path.as_os_str().to_owned();
    summary_path.push(".summary.json");
    let summary_path = PathBuf::from(summary_path);
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(&summary_path, text + "\n")?;
    Ok(summary_path)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacePoint {
    pub n: usize,
    pub m: usize,
    pub peak_space: usize,
    pub sampled_vars: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceCurve {
    pub points: Vec<SpacePoint>,
    /// Least-squares slope of `log peak` on `log n`.
    pub slope: f64,
}

/// Peak sketch size for each `n`, streaming a fresh generated instance with
/// `m = m_per_n · n`. Only the sketch is built.
pub fn space_curve(grid: &[usize], gen: &GenSpec, m_per_n: usize, cfg: &EstimatorConfig) -> Result<SpaceCurve> {
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("n grid must be sorted".into()));
    }
    let points = grid
        .par_iter()
        .map(|&n| {
            let inst = generate(&GenSpec { n, m: m_per_n * n, ..gen.clone() })?;
            let header = StreamHeader::of(&inst);
            let params = cfg.resolve(n, header.k, header.alphabet.size(), None)?;
            let sk = crate::streaming::sketch_stream(instance_stream(&inst), header, &params, RandomTape::new(cfg.seed))?;
            Ok(SpacePoint { n, m: inst.m(), peak_space: sk.peak_space, sampled_vars: sk.s.len() })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.peak_space.max(1) as f64).collect();
    Ok(SpaceCurve { slope: stats::log_log_slope(&xs, &ys), points })
}

impl SpaceCurve {
    pub fn to_json(&self, cfg: &EstimatorConfig) -> serde_json::Value {
        json!({ "points": self.points, "slope": self.slope, "config": cfg })
    }
}

/// `exact ≤ lp` on every record that carries both.
pub fn relaxation_holds(records: &[TrialRecord]) -> bool {
    records.iter().all(|r| match (&r.exact, &r.lp) {
        (Some(e), Some(l)) => parse_ratio(e).zip(parse_ratio(l)).is_some_and(|(e, l)| e <= l + 1e-12),
        _ => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::tests::triangle_maxcut;
    use crate::csp::write_instance;
    use crate::gen::Family;

    fn spec(mode: Mode, source: InstanceSource, trials: usize) -> ExperimentSpec {
        ExperimentSpec {
            mode,
            source,
            config: EstimatorConfig { b: Some(2), alpha: Some(0.5), epsilon: 0.5, ..Default::default() },
            trials,
            aloc: ALocKind::Lp,
            timing: false,
        }
    }

    #[test]
    fn exact_on_triangle() {
        let s = spec(Mode::Exact, InstanceSource::Inline(write_instance(&triangle_maxcut())), 3);
        let (recs, summary) = run_experiment(&s).unwrap();
        assert!(recs.iter().all(|r| r.exact.as_deref() == Some("2/3")));
        assert_eq!(summary.errors, 0);
    }

    #[test]
    fn lp_dominates_exact() {
        let g = GenSpec { k: 2, sigma: 2, ..GenSpec::new(Family::Random, 6, 8) };
        let (recs, summary) = run_experiment(&spec(Mode::Lp, InstanceSource::Generator(g), 50)).unwrap();
        assert_eq!(summary.errors, 0);
        assert!(relaxation_holds(&recs));
    }

    #[test]
    fn records_are_reproducible() {
        let g = GenSpec::new(Family::MaxDiCut, 16, 40);
        let s = spec(Mode::Coupled, InstanceSource::Generator(g), 6);
        let a = run_experiment(&s).unwrap().0;
        let b = run_experiment(&s).unwrap().0;
        let dump = |r: &[TrialRecord]| r.iter().map(|x| serde_json::to_string(x).unwrap()).collect::<Vec<_>>();
        assert_eq!(dump(&a), dump(&b));
        assert!(a.iter().enumerate().all(|(i, r)| r.trial == i && r.seed == i as u64));
    }

    #[test]
    fn errors_are_recorded_not_fatal() {
        let mut s = spec(Mode::Offline, InstanceSource::Generator(GenSpec::new(Family::MaxCut, 8, 10)), 2);
        s.config.alpha = None;
        let (recs, summary) = run_experiment(&s).unwrap();
        assert_eq!(summary.errors, 2);
        assert!(recs[0].error.is_some());
    }

    #[test]
    fn results_files() {
        let dir = std::env::temp_dir().join(format!("cspstream-harness-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let s = spec(Mode::Exact, InstanceSource::Inline(write_instance(&triangle_maxcut())), 2);
        let (recs, summary) = run_experiment(&s).unwrap();
        let path = dir.join("out.jsonl");
        let sp = write_results(&path, &recs, &summary).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sp).unwrap()).unwrap();
        assert_eq!(v["spec"]["config"]["epsilon"], 0.5);
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn flat_grid_gives_flat_curve() {
        let cfg = EstimatorConfig { b: Some(2), ..Default::default() };
        let c = space_curve(&[64, 64, 64], &GenSpec::new(Family::MaxCut, 64, 0), 4, &cfg).unwrap();
        assert_eq!(c.slope, 0.0);
        assert!(space_curve(&[128, 64], &GenSpec::new(Family::MaxCut, 64, 0), 4, &cfg).is_err());
    }
}
