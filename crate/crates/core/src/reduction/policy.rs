use crate::csp::Instance;
use crate::error::{Error, Result};
use crate::reduced::Tier;
use crate::tape::{Namespace, RandomTape};

use super::config::{Params, PolicyKind};

/// Per-variable tier and copy count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tiering {
    pub tier: Vec<Tier>,
    /// `d̃(v)`; zero only for variables of degree zero.
    pub dtilde: Vec<usize>,
    /// `deg_G̃(v)` when the policy looked at `G̃`.
    pub gtilde_degree: Option<Vec<usize>>,
    /// Variables whose proposed `d̃` fell outside the band and were reset
    /// to their true degree.
    pub band_violations: Vec<u32>,
}

impl Tiering {
    pub fn is_high(&self, v: usize) -> bool {
        self.tier[v] == Tier::High
    }

    /// Rejects any `d̃` outside `(1 ± ε_adv)·deg`.
    pub fn check_band(&self, degrees: &[usize], eps: f64) -> Result<()> {
        for (v, (&d, &deg)) in self.dtilde.iter().zip(degrees).enumerate() {
            if !within_band(d, deg, eps) {
                return Err(Error::OutOfBand { var: v, value: d, degree: deg, eps });
            }
        }
        Ok(())
    }
}

pub(crate) fn within_band(d: usize, deg: usize, eps: f64) -> bool {
    if deg == 0 {
        return d == 0;
    }
    let (d, deg) = (d as f64, deg as f64);
    d >= 1.0 && d >= (1.0 - eps) * deg - 1e-9 && d <= (1.0 + eps) * deg + 1e-9
}

pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// `d̃` implied by a `G̃` degree: `max(1, round(deg_G̃ · R / B))`.
pub fn dtilde_from_gtilde(gdeg: usize, params: &Params) -> usize {
    round_half_up(gdeg as f64 * params.hash_range as f64 / params.b as f64).max(1)
}

/// The key of position `t` of constraint copy `(i, l)`.
pub(crate) fn pos_key(i: u32, l: u32, t: usize) -> [u64; 3] {
    [i as u64, l as u64, t as u64]
}

/// Whether `(i, l, t)` lands in `G̃`.
pub fn in_gtilde(tape: &RandomTape, i: u32, l: u32, t: usize, params: &Params) -> bool {
    tape.bernoulli(Namespace::GTilde, &pos_key(i, l, t), params.sample_prob())
}

/// Whether `(i, l, t)` lands in `G`.
pub fn in_g(tape: &RandomTape, i: u32, l: u32, t: usize, params: &Params) -> bool {
    tape.uniform(Namespace::G, &pos_key(i, l, t)) < params.g_prob
}

/// Chooses tiers and copy counts for every variable.
pub fn compute_tiering(inst: &Instance, params: &Params, tape: &RandomTape) -> Tiering {
    let degrees = inst.degrees();
    let n = inst.n();
    let threshold = params.high_threshold();
    let mut tier = vec![Tier::Low; n];
    let mut dtilde = degrees.clone();
    let mut band_violations = Vec::new();
    let mut gtilde_degree = None;
    match params.policy {
        PolicyKind::Exact => {
            for v in 0..n {
                if degrees[v] as f64 > threshold {
                    tier[v] = Tier::High;
                }
            }
        }
        PolicyKind::WorstCaseRandom => {
            for v in 0..n {
                let deg = degrees[v];
                if deg == 0 {
                    continue;
                }
                let lo = (((1.0 - params.eps_adv) * deg as f64) - 1e-9).ceil().max(1.0) as usize;
                let hi = (((1.0 + params.eps_adv) * deg as f64) + 1e-9).floor().max(lo as f64) as usize;
                let d = lo + tape.index(Namespace::Adversary, &[v as u64], (hi - lo + 1) as u64) as usize;
                if d as f64 > threshold {
                    tier[v] = Tier::High;
                    dtilde[v] = d;
                }
            }
        }
        PolicyKind::CoupledGtilde => {
            let mut gdeg = vec![0usize; n];
            for (i, c) in inst.constraints().iter().enumerate() {
                for l in 0..params.b as u32 {
                    for (t, &v) in c.vars.iter().enumerate() {
                        if in_gtilde(tape, i as u32, l, t, params) {
                            gdeg[v as usize] += 1;
                        }
                    }
                }
            }
            for v in 0..n {
                if gdeg[v] as f64 > params.nq {
                    tier[v] = Tier::High;
                    let d = dtilde_from_gtilde(gdeg[v], params);
                    if within_band(d, degrees[v], params.eps_adv) {
                        dtilde[v] = d;
                    } else {
                        band_violations.push(v as u32);
                    }
                }
            }
            gtilde_degree = Some(gdeg);
        }
    }
    Tiering { tier, dtilde, gtilde_degree, band_violations }
}
