//! `w`-wise independent hashing by random polynomials over a prime field.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tape::{Namespace, RandomTape};

/// Mersenne prime 2^61 − 1.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// `h(v) = ((Σ_j a_j v^j mod p) mod R) + 1`, a map into `1..=R`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KWiseHash {
    modulus: u64,
    coeffs: Vec<u64>,
    range: u64,
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    let x = a as u128 * b as u128;
    if p == MERSENNE_61 {
        let r = (x as u64 & MERSENNE_61) + (x >> 61) as u64;
        let r = (r & MERSENNE_61) + (r >> 61);
        if r >= MERSENNE_61 {
            r - MERSENNE_61
        } else {
            r
        }
    } else {
        (x % p as u128) as u64
    }
}

impl KWiseHash {
    /// Draws `w` coefficients from the tape; independence is `w`-wise.
    pub fn from_tape(tape: &RandomTape, w: usize, range: u64) -> Result<Self> {
        if w == 0 || range == 0 {
            return Err(Error::InvalidParameter(
                "hash needs w ≥ 1 and range ≥ 1".into(),
            ));
        }
        let coeffs = (0..w)
            .map(|j| tape.index(Namespace::HashSeed, &[j as u64], MERSENNE_61))
            .collect();
        Ok(Self { modulus: MERSENNE_61, coeffs, range })
    }

    /// Explicit coefficients over an arbitrary prime modulus.
    pub fn with_modulus(coeffs: Vec<u64>, modulus: u64, range: u64) -> Result<Self> {
        if coeffs.is_empty() || range == 0 || modulus < 2 {
            return Err(Error::InvalidParameter("degenerate hash parameters".into()));
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c >= modulus) {
            return Err(Error::InvalidParameter(format!(
                "coefficient {c} is not below the modulus {modulus}"
            )));
        }
        Ok(Self { modulus, coeffs, range })
    }

    pub fn width(&self) -> usize {
        self.coeffs.len()
    }

    pub fn range(&self) -> u64 {
        self.range
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// The polynomial value in `0..p`, before range reduction.
    pub fn field_value(&self, v: u64) -> u64 {
        let p = self.modulus;
        let x = v % p;
        self.coeffs
            .iter()
            .rev()
            .fold(0u64, |acc, &a| (mulmod(acc, x, p) + a) % p)
    }

    pub fn eval(&self, v: u64) -> u64 {
        self.field_value(v) % self.range + 1
    }

    pub fn hits(&self, v: u64) -> bool {
        self.eval(v) == 1
    }
}
