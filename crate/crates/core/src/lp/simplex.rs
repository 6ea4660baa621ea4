//! Fraction-free (integer-preserving) tableau simplex.
//!
//! The tableau is kept as integers `M` with a common positive denominator
//! `d`; a pivot on `(r, s)` with `p = M[r][s]` sets
//! `M[i][j] ← (M[i][j]·p − M[i][s]·M[r][j]) / d` for `i ≠ r` and `d ← p`,
//! where every division is exact. Bland's rule guarantees termination.

use std::cmp::Ordering;

use num::{BigInt, BigRational, Signed, Zero};

use crate::error::{Error, Result};

#[derive(Debug)]
pub(crate) struct Overflow;

pub(crate) trait Entry: Clone + std::fmt::Debug {
    fn from_i64(v: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn sign(&self) -> i32;
    fn neg(&self) -> Self;
    /// `(a·p − b·c) / d`, exact.
    fn bareiss(a: &Self, p: &Self, b: &Self, c: &Self, d: &Self) -> std::result::Result<Self, Overflow>;
    /// Compares `a·b` with `c·d`.
    fn cmp_products(a: &Self, b: &Self, c: &Self, d: &Self) -> std::result::Result<Ordering, Overflow>;
    fn to_bigint(&self) -> BigInt;
}

impl Entry for i128 {
    fn from_i64(v: i64) -> Self {
        v as i128
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn sign(&self) -> i32 {
        self.signum() as i32
    }
    fn neg(&self) -> Self {
        -self
    }
    fn bareiss(a: &Self, p: &Self, b: &Self, c: &Self, d: &Self) -> std::result::Result<Self, Overflow> {
        let ap = a.checked_mul(*p).ok_or(Overflow)?;
        let bc = b.checked_mul(*c).ok_or(Overflow)?;
        Ok(ap.checked_sub(bc).ok_or(Overflow)? / d)
    }
    fn cmp_products(a: &Self, b: &Self, c: &Self, d: &Self) -> std::result::Result<Ordering, Overflow> {
        let l = a.checked_mul(*b).ok_or(Overflow)?;
        let r = c.checked_mul(*d).ok_or(Overflow)?;
        Ok(l.cmp(&r))
    }
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Entry for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn sign(&self) -> i32 {
        if self.is_positive() {
            1
        } else if self.is_negative() {
            -1
        } else {
            0
        }
    }
    fn neg(&self) -> Self {
        -self
    }
    fn bareiss(a: &Self, p: &Self, b: &Self, c: &Self, d: &Self) -> std::result::Result<Self, Overflow> {
        Ok((a * p - b * c) / d)
    }
    fn cmp_products(a: &Self, b: &Self, c: &Self, d: &Self) -> std::result::Result<Ordering, Overflow> {
        Ok((a * b).cmp(&(c * d)))
    }
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
}

/// An equality-form LP: maximise `c·x` subject to `A x = b`, `x ≥ 0`,
/// with `b ≥ 0` and integer data.
#[derive(Clone, Debug)]
pub(crate) struct Problem {
    pub a: Vec<Vec<i64>>,
    pub b: Vec<i64>,
    pub c: Vec<i64>,
    /// Optional tie-breaking objective maximised over the optimal face of `c`.
    pub secondary: Option<Vec<i64>>,
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub values: Vec<BigRational>,
    pub objective: BigRational,
    pub secondary: Option<BigRational>,
}

enum Failure {
    Overflow,
    Lp(Error),
}

impl From<Overflow> for Failure {
    fn from(_: Overflow) -> Self {
        Failure::Overflow
    }
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    objs: Vec<Vec<T>>,
    basis: Vec<usize>,
    d: T,
    ncols: usize,
}

impl<T: Entry> Tableau<T> {
    fn rhs(&self) -> usize {
        self.ncols
    }

    fn pivot(&mut self, r: usize, s: usize) -> std::result::Result<(), Overflow> {
        let p = self.rows[r][s].clone();
        let d = self.d.clone();
        let pivot_row = self.rows[r].clone();
        let zero = T::from_i64(0);
        let update = |row: &mut Vec<T>| -> std::result::Result<(), Overflow> {
            let b = row[s].clone();
            for (j, a) in row.iter_mut().enumerate() {
                let c = &pivot_row[j];
                if b.is_zero() || c.is_zero() {
                    if !a.is_zero() {
                        *a = T::bareiss(a, &p, &zero, &zero, &d)?;
                    }
                } else {
                    *a = T::bareiss(a, &p, &b, c, &d)?;
                }
            }
            Ok(())
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                update(row)?;
            }
        }
        for obj in self.objs.iter_mut() {
            update(obj)?;
        }
        self.d = p;
        self.basis[r] = s;
        if self.d.sign() < 0 {
            for row in self.rows.iter_mut().chain(self.objs.iter_mut()) {
                for a in row.iter_mut() {
                    *a = a.neg();
                }
            }
            self.d = self.d.neg();
        }
        Ok(())
    }

    fn objective_row(&self, c: &[i64]) -> std::result::Result<Vec<T>, Overflow> {
        let zero = T::from_i64(0);
        let mut obj: Vec<T> = (0..=self.ncols)
            .map(|j| {
                let cj = c.get(j).copied().unwrap_or(0);
                T::from_i64(-cj)
            })
            .collect();
        // obj[j] = Σ_i c_B(i)·M[i][j] − c_j·d
        for o in obj.iter_mut() {
            *o = T::bareiss(o, &self.d, &zero, &zero, &T::from_i64(1))?;
        }
        for (i, row) in self.rows.iter().enumerate() {
            let cb = c.get(self.basis[i]).copied().unwrap_or(0);
            if cb == 0 {
                continue;
            }
            let cb = T::from_i64(-cb);
            let one = T::from_i64(1);
            for (j, o) in obj.iter_mut().enumerate() {
                if !row[j].is_zero() {
                    *o = T::bareiss(o, &one, &cb, &row[j], &one)?;
                }
            }
        }
        Ok(obj)
    }

    /// Runs Bland's rule on objective row `which` until optimal.
    fn optimise(&mut self, which: usize, banned: &[bool]) -> std::result::Result<(), Failure> {
        let rhs = self.rhs();
        loop {
            let entering = (0..self.ncols)
                .find(|&j| !banned[j] && self.objs[which][j].sign() < 0);
            let Some(s) = entering else { return Ok(()) };
            let mut best: Option<usize> = None;
            for i in 0..self.rows.len() {
                if self.rows[i][s].sign() <= 0 {
                    continue;
                }
                best = match best {
                    None => Some(i),
                    Some(b) => {
                        let ord = T::cmp_products(
                            &self.rows[i][rhs],
                            &self.rows[b][s],
                            &self.rows[b][rhs],
                            &self.rows[i][s],
                        )?;
                        match ord {
                            Ordering::Less => Some(i),
                            Ordering::Equal if self.basis[i] < self.basis[b] => Some(i),
                            _ => Some(b),
                        }
                    }
                };
            }
            let Some(r) = best else {
                return Err(Failure::Lp(Error::Unbounded));
            };
            self.pivot(r, s)?;
        }
    }
}

fn to_rational<T: Entry>(num: &T, den: &T) -> BigRational {
    BigRational::new(num.to_bigint(), den.to_bigint())
}

fn run<T: Entry>(prob: &Problem) -> std::result::Result<Outcome, Failure> {
    let m = prob.a.len();
    let n = prob.c.len();
    let total = n + m;
    let rows: Vec<Vec<T>> = prob
        .a
        .iter()
        .zip(&prob.b)
        .enumerate()
        .map(|(i, (row, &bi))| {
            debug_assert!(bi >= 0);
            let mut r: Vec<T> = row.iter().map(|&v| T::from_i64(v)).collect();
            r.extend((0..m).map(|k| T::from_i64((k == i) as i64)));
            r.push(T::from_i64(bi));
            r
        })
        .collect();
    let mut tab = Tableau {
        rows,
        objs: Vec::new(),
        basis: (n..total).collect(),
        d: T::from_i64(1),
        ncols: total,
    };
    let phase1: Vec<i64> = (0..total).map(|j| if j >= n { -1 } else { 0 }).collect();
    let obj = tab.objective_row(&phase1)?;
    tab.objs.push(obj);
    tab.optimise(0, &vec![false; total])?;
    if tab.objs[0][total].sign() < 0 {
        return Err(Failure::Lp(Error::Infeasible));
    }

    // Drive artificials out of the basis; rows where that is impossible are redundant.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            if let Some(s) = (0..n).find(|&j| !tab.rows[r][j].is_zero()) {
                tab.pivot(r, s)?;
            } else {
                tab.rows.remove(r);
                tab.basis.remove(r);
                continue;
            }
        }
        r += 1;
    }
    for row in tab.rows.iter_mut() {
        let rhs = row[total].clone();
        row.truncate(n);
        row.push(rhs);
    }
    tab.ncols = n;
    tab.objs.clear();

    let obj = tab.objective_row(&prob.c)?;
    tab.objs.push(obj);
    tab.optimise(0, &vec![false; n])?;

    let mut secondary = None;
    if let Some(c2) = &prob.secondary {
        let banned: Vec<bool> = (0..n).map(|j| tab.objs[0][j].sign() > 0).collect();
        let obj2 = tab.objective_row(c2)?;
        tab.objs.push(obj2);
        tab.optimise(1, &banned)?;
        secondary = Some(to_rational(&tab.objs[1][n], &tab.d));
    }

    let mut values = vec![BigRational::zero(); n];
    for (i, &j) in tab.basis.iter().enumerate() {
        values[j] = to_rational(&tab.rows[i][n], &tab.d);
    }
    Ok(Outcome {
        values,
        objective: to_rational(&tab.objs[0][n], &tab.d),
        secondary,
    })
}

/// Solves exactly, starting in 128-bit integers and falling back to
/// arbitrary precision if any intermediate value overflows.
pub(crate) fn solve(prob: &Problem) -> Result<Outcome> {
    if prob.b.iter().any(|&b| b < 0) || prob.a.iter().any(|r| r.len() != prob.c.len()) {
        return Err(Error::InvalidParameter("malformed equality-form LP".into()));
    }
    match run::<i128>(prob) {
        Ok(o) => Ok(o),
        Err(Failure::Lp(e)) => Err(e),
        Err(Failure::Overflow) => match run::<BigInt>(prob) {
            Ok(o) => Ok(o),
            Err(Failure::Lp(e)) => Err(e),
            Err(Failure::Overflow) => unreachable!("arbitrary precision cannot overflow"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(d))
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 (slacks appended)
        let prob = Problem {
            a: vec![
                vec![1, 0, 1, 0, 0],
                vec![0, 2, 0, 1, 0],
                vec![3, 2, 0, 0, 1],
            ],
            b: vec![4, 12, 18],
            c: vec![3, 5, 0, 0, 0],
            secondary: None,
        };
        let o = solve(&prob).unwrap();
        assert_eq!(o.objective, q(36, 1));
        assert_eq!(o.values[0], q(2, 1));
        assert_eq!(o.values[1], q(6, 1));
    }

    #[test]
    fn fractional_vertex() {
        // max x + y, 2x + y + s1 = 1, x + 2y + s2 = 1
        let prob = Problem {
            a: vec![vec![2, 1, 1, 0], vec![1, 2, 0, 1]],
            b: vec![1, 1],
            c: vec![1, 1, 0, 0],
            secondary: None,
        };
        let o = solve(&prob).unwrap();
        assert_eq!(o.objective, q(2, 3));
        assert_eq!(o.values[0], q(1, 3));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let infeasible = Problem { a: vec![vec![1, 1], vec![1, 1]], b: vec![1, 2], c: vec![1, 0], secondary: None };
        assert!(matches!(solve(&infeasible), Err(Error::Infeasible)));
        let unbounded = Problem { a: vec![vec![1, -1]], b: vec![0], c: vec![1, 0], secondary: None };
        assert!(matches!(solve(&unbounded), Err(Error::Unbounded)));
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let prob = Problem {
            a: vec![vec![1, 1, 0], vec![2, 2, 0], vec![0, 1, 1]],
            b: vec![1, 2, 1],
            c: vec![0, 0, 1],
            secondary: None,
        };
        let o = solve(&prob).unwrap();
        assert_eq!(o.objective, q(1, 1));
    }

    #[test]
    fn secondary_objective_stays_on_optimal_face() {
        // max x + y with x + y + s = 1; among optima prefer y.
        let prob = Problem {
            a: vec![vec![1, 1, 1]],
            b: vec![1],
            c: vec![1, 1, 0],
            secondary: Some(vec![0, 1, 0]),
        };
        let o = solve(&prob).unwrap();
        assert_eq!(o.objective, q(1, 1));
        assert_eq!(o.secondary, Some(q(1, 1)));
        assert_eq!(o.values[1], q(1, 1));
    }

    #[test]
    fn bigint_path_agrees_with_i128() {
        let prob = Problem {
            a: vec![vec![3, 1, 1, 0], vec![1, 4, 0, 1]],
            b: vec![7, 9],
            c: vec![2, 3, 0, 0],
            secondary: None,
        };
        let fast = match run::<i128>(&prob) { Ok(o) => o, Err(_) => panic!() };
        let slow = match run::<BigInt>(&prob) { Ok(o) => o, Err(_) => panic!() };
        assert_eq!(fast.objective, slow.objective);
        assert_eq!(fast.values, slow.values);
    }
}
