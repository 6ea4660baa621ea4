use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How variable copy counts `d̃(v)` are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// `d̃(v) = deg(v)`.
    Exact,
    /// Uniform integer in the permitted band, keyed per variable.
    WorstCaseRandom,
    /// `d̃(v)` read off the `G̃` sample, exactly as the streaming side does.
    CoupledGtilde,
}

/// How high-tier positions are wired to copies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Wiring {
    /// An independent uniform copy per position.
    Uniform,
    /// Still uniform per position, but drawn through the same `G`, resample
    /// and copy-sample events the streaming reduction uses.
    Coupled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsetSampler {
    FisherYates,
    /// A reservoir fed in `(i, l)` order, matching an in-order stream.
    ReservoirReplay,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Copies per constraint; defaults to `⌈|Σ|^{2k}/ε⌉`.
    pub b: Option<usize>,
    /// Defaults to `ε/(2k)`.
    pub rho: Option<f64>,
    pub radius: usize,
    pub t_max: Option<usize>,
    pub c_exp: f64,
    pub q_exp: f64,
    /// Width of the adversary's band; defaults to `ε`.
    pub eps_adv: Option<f64>,
    /// Overrides `round(n^c)`.
    pub hash_range: Option<u64>,
    /// Overrides `round(n^{1-c})`.
    pub cset_size: Option<usize>,
    pub space_cap: Option<usize>,
    pub seed: u64,
    pub alpha: Option<f64>,
    pub policy: PolicyKind,
    pub wiring: Wiring,
    pub cset_sampler: CsetSampler,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.1,
            delta: 0.05,
            b: None,
            rho: None,
            radius: 1,
            t_max: None,
            c_exp: 0.25,
            q_exp: 0.5,
            eps_adv: None,
            hash_range: None,
            cset_size: None,
            space_cap: None,
            seed: 0,
            alpha: None,
            policy: PolicyKind::Exact,
            wiring: Wiring::Uniform,
            cset_sampler: CsetSampler::FisherYates,
        }
    }
}

impl EstimatorConfig {
    /// The settings under which offline and streaming runs are coupled.
    pub fn coupled(mut self) -> Self {
        self.policy = PolicyKind::CoupledGtilde;
        self.wiring = Wiring::Coupled;
        self.cset_sampler = CsetSampler::ReservoirReplay;
        self
    }

    pub fn resolve(&self, n: usize, k: usize, sigma: usize, m: Option<usize>) -> Result<Params> {
        Params::resolve(self, n, k, sigma, m)
    }
}

/// Fully resolved constants for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub m: Option<usize>,
    pub k: usize,
    pub sigma: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub b: usize,
    pub rho: f64,
    /// `⌊B/ρ⌋`
    pub cap: usize,
    pub radius: usize,
    pub t_max: usize,
    /// `10·T_max`
    pub hash_width: usize,
    pub c_exp: f64,
    pub q_exp: f64,
    /// `R`, the integer stand-in for `n^c`.
    pub hash_range: u64,
    /// `G` inclusion probability, `min(1, 2/R)`.
    pub g_prob: f64,
    /// `n^q`
    pub nq: f64,
    pub eps_adv: f64,
    pub cset_size: usize,
    pub cset_clamped: bool,
    pub space_cap: usize,
    pub seed: u64,
    pub alpha: Option<f64>,
    pub policy: PolicyKind,
    pub wiring: Wiring,
    pub cset_sampler: CsetSampler,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

impl Params {
    pub fn resolve(cfg: &EstimatorConfig, n: usize, k: usize, sigma: usize, m: Option<usize>) -> Result<Self> {
        if n == 0 || k == 0 || sigma < 2 {
            return Err(Error::InvalidParameter(format!("need n ≥ 1, k ≥ 1, |Σ| ≥ 2 (got {n}, {k}, {sigma})")));
        }
        let epsilon = positive("epsilon", cfg.epsilon)?;
        let delta = positive("delta", cfg.delta)?;
        if !(cfg.c_exp >= 0.0 && cfg.c_exp < 1.0) {
            return Err(Error::InvalidParameter(format!("c must lie in [0, 1), got {}", cfg.c_exp)));
        }
        if cfg.q_exp.is_nan() || cfg.q_exp < 0.0 {
            return Err(Error::InvalidParameter(format!("q must be non-negative, got {}", cfg.q_exp)));
        }
        let b = match cfg.b {
            Some(0) => return Err(Error::InvalidParameter("B must be ≥ 1".into())),
            Some(b) => b,
            None => {
                let raw = (sigma as f64).powi(2 * k as i32) / epsilon;
                if raw > 1e7 {
                    return Err(Error::TooLarge { what: "default B", size: raw as u128, limit: 10_000_000 });
                }
                raw.ceil() as usize
            }
        };
        let rho = positive("rho", cfg.rho.unwrap_or(epsilon / (2 * k) as f64))?;
        let cap = ((b as f64 / rho) * (1.0 + 1e-12)).floor() as usize;
        let t_max = match cfg.t_max {
            Some(0) => return Err(Error::InvalidParameter("T_max must be ≥ 1".into())),
            Some(t) => t,
            None => {
                let base = (k * cap.max(1)) as u64;
                (0..=cfg.radius).fold(1u64, |acc, _| acc.saturating_mul(base)).min(64) as usize
            }
        };
        let hash_range = match cfg.hash_range {
            Some(0) => return Err(Error::InvalidParameter("hash range must be ≥ 1".into())),
            Some(r) => r,
            None if cfg.c_exp == 0.0 => 1,
            None => ((n as f64).powf(cfg.c_exp).round() as u64).max(2),
        };
        let g_prob = (2.0 / hash_range as f64).min(1.0);
        let nq = (n as f64).powf(cfg.q_exp);
        let eps_adv = cfg.eps_adv.unwrap_or(epsilon);
        if !(0.0..1.0).contains(&eps_adv) {
            return Err(Error::InvalidParameter(format!("eps_adv must lie in [0, 1), got {eps_adv}")));
        }
        let mut cset_size = match cfg.cset_size {
            Some(0) => return Err(Error::InvalidParameter("|C| must be ≥ 1".into())),
            Some(s) => s,
            None => ((n as f64 / hash_range as f64).round() as usize).max(1),
        };
        let mut cset_clamped = false;
        if let Some(m) = m {
            if m > 0 && cset_size > m * b {
                cset_size = m * b;
                cset_clamped = true;
            }
        }
        let space_cap = cfg.space_cap.unwrap_or_else(|| {
            (64.0 * (k * b) as f64 * (n as f64).powf(1.0 - cfg.c_exp / 3.0)).ceil() as usize
        });
        Ok(Self {
            n,
            m,
            k,
            sigma,
            epsilon,
            delta,
            b,
            rho,
            cap,
            radius: cfg.radius,
            t_max,
            hash_width: 10 * t_max,
            c_exp: cfg.c_exp,
            q_exp: cfg.q_exp,
            hash_range,
            g_prob,
            nq,
            eps_adv,
            cset_size,
            cset_clamped,
            space_cap,
            seed: cfg.seed,
            alpha: cfg.alpha,
            policy: cfg.policy,
            wiring: cfg.wiring,
            cset_sampler: cfg.cset_sampler,
        })
    }

    /// Per-copy sampling probability `1/R`.
    pub fn sample_prob(&self) -> f64 {
        1.0 / self.hash_range as f64
    }

    /// `α / (1 + 2|Σ|^k ε)`
    pub fn output_scale(&self) -> Result<f64> {
        let alpha = self.alpha.ok_or_else(|| {
            Error::InvalidParameter("the integrality gap α must be supplied".into())
        })?;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("α must lie in (0, 1], got {alpha}")));
        }
        Ok(alpha / (1.0 + 2.0 * (self.sigma as f64).powi(self.k as i32) * self.epsilon))
    }

    /// Copies whose unrounded `d̃` exceeds `n^{q+c}/B` are high tier.
    pub fn high_threshold(&self) -> f64 {
        self.nq * self.hash_range as f64 / self.b as f64
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("params serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_formulas() {
        let p = EstimatorConfig { epsilon: 0.5, ..Default::default() }.resolve(256, 2, 2, Some(1024)).unwrap();
        assert_eq!(p.b, 32);
        assert_eq!(p.rho, 0.125);
        assert_eq!(p.cap, 256);
        assert_eq!(p.t_max, 64);
        assert_eq!(p.hash_width, 640);
        assert_eq!(p.hash_range, 4);
        assert_eq!(p.g_prob, 0.5);
        assert_eq!(p.nq, 16.0);
        assert_eq!(p.cset_size, 64);
        assert!(!p.cset_clamped);
        assert_eq!(p.eps_adv, 0.5);
    }

    #[test]
    fn small_range_rounds_up_to_two_and_zero_exponent_gives_one() {
        let p = EstimatorConfig { b: Some(2), c_exp: 0.01, ..Default::default() }.resolve(10, 2, 2, None).unwrap();
        assert_eq!(p.hash_range, 2);
        assert_eq!(p.g_prob, 1.0);
        let p = EstimatorConfig { b: Some(2), c_exp: 0.0, ..Default::default() }.resolve(10, 2, 2, Some(3)).unwrap();
        assert_eq!(p.hash_range, 1);
        assert_eq!(p.cset_size, 6);
        assert!(p.cset_clamped);
    }

    #[test]
    fn tiny_t_max_when_cap_is_small() {
        let p = EstimatorConfig { b: Some(1), rho: Some(1.0), radius: 1, ..Default::default() }
            .resolve(16, 2, 2, None)
            .unwrap();
        assert_eq!(p.cap, 1);
        assert_eq!(p.t_max, 4);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(EstimatorConfig { epsilon: 0.0, ..Default::default() }.resolve(4, 2, 2, None).is_err());
        assert!(EstimatorConfig { c_exp: 1.0, ..Default::default() }.resolve(4, 2, 2, None).is_err());
        assert!(EstimatorConfig { b: Some(0), ..Default::default() }.resolve(4, 2, 2, None).is_err());
        let p = EstimatorConfig { b: Some(2), ..Default::default() }.resolve(4, 2, 2, None).unwrap();
        assert!(p.output_scale().is_err());
    }

    #[test]
    fn output_scale() {
        let p = EstimatorConfig { b: Some(2), epsilon: 0.25, alpha: Some(0.5), ..Default::default() }
            .resolve(4, 2, 2, None)
            .unwrap();
        assert_eq!(p.output_scale().unwrap(), 0.5 / 3.0);
    }
}
