use super::{Instance, Predicate};
use crate::error::{Error, Result};
use crate::tape::{Namespace, RandomTape};

/// Pads every constraint to arity `k`. Padded position `t` (0-based, at or
/// beyond the original arity) reads the shared dummy variable `n + t - 1`,
/// so at most `k - 1` unconstrained variables are appended and the degrees
/// of real variables do not change.
pub fn pad_arity(inst: &Instance, k: usize) -> Result<Instance> {
    for (index, c) in inst.constraints().iter().enumerate() {
        if c.vars.len() > k {
            return Err(Error::ArityTooLarge { index, arity: c.vars.len(), k });
        }
    }
    if inst.constraints().iter().all(|c| c.vars.len() == k) {
        return Ok(inst.clone());
    }
    let sigma = inst.sigma();
    let n = inst.n();
    let mut out = Instance::new(n + k - 1, inst.alphabet());
    for c in inst.constraints() {
        let p = inst.predicate(c.pred);
        let a = p.arity();
        let padded = if a == k {
            p.clone()
        } else {
            Predicate::from_fn(k, sigma, |b| p.eval(&b[..a]))?
        };
        let id = out.intern(padded)?;
        let mut vars = c.vars.clone();
        vars.extend((a..k).map(|t| (n + t - 1) as u32));
        out.push(id, vars)?;
    }
    Ok(out)
}

/// The nontrivial part of an instance plus counts of constant constraints.
#[derive(Clone, Debug)]
pub struct TrivialSplit {
    pub instance: Instance,
    pub m_true: usize,
    pub m_false: usize,
}

pub fn split_trivial(inst: &Instance) -> TrivialSplit {
    let mut out = Instance::new(inst.n(), inst.alphabet());
    let (mut m_true, mut m_false) = (0, 0);
    for c in inst.constraints() {
        let p = inst.predicate(c.pred);
        if p.trivially_true() {
            m_true += 1;
        } else if p.trivially_false() {
            m_false += 1;
        } else {
            let id = out.intern(p.clone()).expect("same alphabet");
            out.push(id, c.vars.clone()).expect("validated constraint");
        }
    }
    TrivialSplit { instance: out, m_true, m_false }
}

/// `(m0 * vhat + m_true) / (m0 + m_true + m_false)`.
pub fn recombine_estimate(vhat: f64, m0: usize, m_true: usize, m_false: usize) -> Result<f64> {
    let m = m0 + m_true + m_false;
    if m == 0 {
        return Err(Error::EmptyInstance);
    }
    if !(0.0..=1.0).contains(&vhat) {
        return Err(Error::InvalidParameter(format!("estimate {vhat} is outside [0, 1]")));
    }
    Ok((m0 as f64 * vhat + m_true as f64) / m as f64)
}

/// Keeps each constraint independently with probability `p`, keyed by its
/// stream index.
pub fn subsample_constraints(inst: &Instance, p: f64, tape: &RandomTape) -> Result<Instance> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("sampling probability {p} is not in (0, 1]")));
    }
    let mut out = Instance::new(inst.n(), inst.alphabet());
    for (i, c) in inst.constraints().iter().enumerate() {
        if tape.bernoulli(Namespace::Subsample, &[i as u64], p) {
            let id = out.intern(inst.predicate(c.pred).clone())?;
            out.push(id, c.vars.clone())?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::tests::{naive_val, triangle_maxcut};
    use crate::csp::{brute_force_val, evaluate, Alphabet, Assignment};

    fn mixed() -> Instance {
        let a = Alphabet::new(2).unwrap();
        Instance::from_constraints(
            3,
            a,
            vec![
                (Predicate::from_fn(1, 2, |b| b[0] == 1).unwrap(), vec![2]),
                (Predicate::xor(), vec![0, 1]),
                (Predicate::from_fn(1, 2, |b| b[0] == 0).unwrap(), vec![0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn padding_preserves_every_assignment_value() {
        let inst = mixed();
        let padded = pad_arity(&inst, 2).unwrap();
        assert_eq!(padded.n(), 4);
        assert_eq!(padded.m(), inst.m());
        assert!(padded.constraints().iter().all(|c| c.vars.len() == 2));
        for code in 0..8u8 {
            let base: Vec<u8> = (0..3).map(|b| (code >> b) & 1).collect();
            for extra in 0..2u8 {
                let mut ext = base.clone();
                ext.push(extra);
                assert_eq!(
                    evaluate(&inst, &Assignment::new(base.clone())).unwrap(),
                    evaluate(&padded, &Assignment::new(ext)).unwrap()
                );
            }
        }
        assert_eq!(brute_force_val(&padded).unwrap(), brute_force_val(&inst).unwrap());
        assert_eq!(padded.degrees()[..3], inst.degrees()[..]);
    }

    #[test]
    fn padding_identity_and_errors() {
        let tri = triangle_maxcut();
        let same = pad_arity(&tri, 2).unwrap();
        assert_eq!(same.n(), 3);
        assert_eq!(same.constraints(), tri.constraints());
        assert!(matches!(pad_arity(&tri, 1), Err(Error::ArityTooLarge { .. })));
    }

    #[test]
    fn split_and_recombine_reproduce_value() {
        let a = Alphabet::new(2).unwrap();
        let inst = Instance::from_constraints(
            4,
            a,
            vec![
                (Predicate::constant(2, 2, true).unwrap(), vec![0, 1]),
                (Predicate::xor(), vec![0, 1]),
                (Predicate::xor(), vec![1, 2]),
                (Predicate::xor(), vec![2, 0]),
                (Predicate::constant(2, 2, false).unwrap(), vec![2, 3]),
                (Predicate::dicut(), vec![3, 0]),
            ],
        )
        .unwrap();
        let split = split_trivial(&inst);
        assert_eq!((split.m_true, split.m_false, split.instance.m()), (1, 1, 4));
        let vhat = crate::csp::rational_value(&brute_force_val(&split.instance).unwrap());
        let r = recombine_estimate(vhat, split.instance.m(), split.m_true, split.m_false).unwrap();
        let exact = crate::csp::rational_value(&naive_val(&inst));
        assert!((r - exact).abs() < 1e-12);
    }

    #[test]
    fn recombine_examples() {
        assert_eq!(recombine_estimate(0.5, 2, 1, 1).unwrap(), 0.5);
        assert_eq!(recombine_estimate(1.0, 3, 0, 0).unwrap(), 1.0);
        assert_eq!(recombine_estimate(0.0, 1, 0, 3).unwrap(), 0.0);
        assert_eq!(recombine_estimate(0.3, 0, 0, 0), Err(Error::EmptyInstance));
    }

    #[test]
    fn subsample_identity_at_one() {
        let tri = triangle_maxcut();
        let s = subsample_constraints(&tri, 1.0, &RandomTape::new(1)).unwrap();
        assert_eq!(s.constraints(), tri.constraints());
        assert!(subsample_constraints(&tri, 0.0, &RandomTape::new(1)).is_err());
    }
}
