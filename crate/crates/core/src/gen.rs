//! Random instance families.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::csp::{Alphabet, Instance, Predicate};
use crate::error::{Error, Result};
use crate::tape::{Namespace, RandomTape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// XOR on pairs.
    MaxCut,
    /// Satisfied exactly by `(1, 0)` on ordered pairs.
    MaxDiCut,
    /// Disjunctions of `k` literals.
    KSat,
    /// Uniform nontrivial truth tables.
    Random,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "maxcut" => Ok(Family::MaxCut),
            "maxdicut" => Ok(Family::MaxDiCut),
            "ksat" => Ok(Family::KSat),
            "random" | "random-table" => Ok(Family::Random),
            other => Err(Error::InvalidParameter(format!("unknown family {other:?}"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::MaxCut => "maxcut",
            Family::MaxDiCut => "maxdicut",
            Family::KSat => "ksat",
            Family::Random => "random",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub sigma: usize,
    pub seed: u64,
    /// When false, the first constraints cover every variable.
    pub allow_isolated: bool,
}

impl GenSpec {
    pub fn new(family: Family, n: usize, m: usize) -> Self {
        let (k, sigma) = match family {
            Family::MaxCut | Family::MaxDiCut => (2, 2),
            Family::KSat => (3, 2),
            Family::Random => (2, 2),
        };
        Self { family, n, m, k, sigma, seed: 0, allow_isolated: false }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

fn validate(spec: &GenSpec) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidParameter(msg));
    match spec.family {
        Family::MaxCut | Family::MaxDiCut if spec.k != 2 || spec.sigma != 2 => {
            return bad(format!("{} needs k = 2 and |Σ| = 2", spec.family));
        }
        Family::KSat if spec.sigma != 2 => return bad("ksat needs |Σ| = 2".into()),
        _ => {}
    }
    if spec.k == 0 || spec.n < spec.k {
        return bad(format!("need 1 ≤ k ≤ n, got k = {} and n = {}", spec.k, spec.n));
    }
    if spec.m == 0 {
        return Err(Error::EmptyInstance);
    }
    if !spec.allow_isolated && spec.m * spec.k < spec.n {
        return bad(format!("{} constraints of arity {} cannot cover {} variables", spec.m, spec.k, spec.n));
    }
    Ok(())
}

fn predicate(spec: &GenSpec, rng: &mut impl Rng) -> Result<Predicate> {
    Ok(match spec.family {
        Family::MaxCut => Predicate::xor(),
        Family::MaxDiCut => Predicate::dicut(),
        Family::KSat => {
            let neg: Vec<bool> = (0..spec.k).map(|_| rng.gen()).collect();
            Predicate::from_fn(spec.k, 2, |x| x.iter().zip(&neg).any(|(&b, &ng)| (b == 1) != ng))?
        }
        Family::Random => loop {
            let len = crate::csp::table_len(spec.sigma, spec.k)
                .filter(|&l| l <= 1 << 20)
                .ok_or(Error::TooLarge { what: "truth table", size: u128::MAX, limit: 1 << 20 })?;
            let table: Vec<bool> = (0..len).map(|_| rng.gen()).collect();
            let p = Predicate::new(spec.k, spec.sigma, table)?;
            if !p.is_trivial() {
                break p;
            }
        },
    })
}

/// Draws an instance. Unless isolated variables are allowed, a shuffled
/// permutation of the variables is spread over the first `⌈n/k⌉`
/// constraints so that every variable appears.
pub fn generate(spec: &GenSpec) -> Result<Instance> {
    validate(spec)?;
    let tape = RandomTape::new(spec.seed);
    let mut rng = tape.rng(Namespace::Generator, &[spec.family as u64, spec.n as u64, spec.m as u64]);
    let mut inst = Instance::new(spec.n, Alphabet::new(spec.sigma)?);
    let mut cover: Vec<u32> = (0..spec.n as u32).collect();
    cover.shuffle(&mut rng);
    let covering = if spec.allow_isolated { 0 } else { spec.n.div_ceil(spec.k) };
    for c in 0..spec.m {
        let mut vars: Vec<u32> = if c < covering {
            cover[c * spec.k..((c + 1) * spec.k).min(spec.n)].to_vec()
        } else {
            Vec::new()
        };
        while vars.len() < spec.k {
            let v = rng.gen_range(0..spec.n as u32);
            if !vars.contains(&v) {
                vars.push(v);
            }
        }
        let id = inst.intern(predicate(spec, &mut rng)?)?;
        inst.push(id, vars)?;
    }
    Ok(inst)
}
