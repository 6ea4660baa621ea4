//! The BasicLP relaxation, solved exactly.
//!
//! Variables are `x[v][σ]` (marginals) and `z[i][b]` (a distribution over
//! tuples for each constraint), with `Σ_σ x[v][σ] = 1` and every marginal of
//! `z[i]` at position `j` equal to `x[v_ij]`. Internally `x` is substituted
//! by the marginal of each variable's first occurrence, which leaves only
//! `z` columns and shrinks the tableau considerably.

pub(crate) mod simplex;

use std::fmt::Write as _;

use num::{BigInt, One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::csp::{brute_force_val, ratio, Instance, Predicate, Rational};
use crate::error::{Error, Result};
use crate::tape::{Namespace, RandomTape};

/// Column cap for [`solve_basic_lp`]: `n·|Σ| + Σ_i |Σ|^{k_i}`.
pub const LP_DIMENSION_LIMIT: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    /// `x[v][σ]`
    pub x: Vec<Vec<Rational>>,
    /// `z[i][b]`, with `b` in lexicographic tuple order.
    pub z: Vec<Vec<Rational>>,
    pub objective: Rational,
}

/// Renders a rational as `p/q`, always with an explicit denominator.
pub fn render_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

impl LpSolution {
    pub fn to_json(&self) -> serde_json::Value {
        let grid = |rows: &Vec<Vec<Rational>>| -> Vec<Vec<String>> {
            rows.iter().map(|r| r.iter().map(render_rational).collect()).collect()
        };
        json!({
            "objective": render_rational(&self.objective),
            "x": grid(&self.x),
            "z": grid(&self.z),
        })
    }
}

struct Layout {
    offsets: Vec<usize>,
    columns: usize,
}

fn layout(inst: &Instance) -> Layout {
    let mut offsets = Vec::with_capacity(inst.m());
    let mut columns = 0;
    for c in inst.constraints() {
        offsets.push(columns);
        columns += inst.predicate(c.pred).num_tuples();
    }
    Layout { offsets, columns }
}

fn marginal_row(inst: &Instance, lay: &Layout, i: usize, j: usize, sigma_val: usize, sign: i64, row: &mut [i64]) {
    let p = inst.predicate(inst.constraints()[i].pred);
    let mut tuple = vec![0usize; p.arity()];
    for b in 0..p.num_tuples() {
        p.tuple(b, &mut tuple);
        if tuple[j] == sigma_val {
            row[lay.offsets[i] + b] += sign;
        }
    }
}

struct Reduced {
    values: Vec<Rational>,
    objective_count: Rational,
    secondary: Option<Rational>,
}

fn solve_reduced(inst: &Instance, secondary: Option<usize>) -> Result<Reduced> {
    if inst.m() == 0 {
        return Err(Error::EmptyInstance);
    }
    let sigma = inst.sigma();
    let lay = layout(inst);
    let dim = inst.n() * sigma + lay.columns;
    if dim > LP_DIMENSION_LIMIT {
        return Err(Error::TooLarge {
            what: "BasicLP dimension",
            size: dim as u128,
            limit: LP_DIMENSION_LIMIT as u128,
        });
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..inst.m() {
        let mut row = vec![0i64; lay.columns];
        let len = inst.predicate(inst.constraints()[i].pred).num_tuples();
        row[lay.offsets[i]..lay.offsets[i] + len].fill(1);
        a.push(row);
        b.push(1);
    }
    let mut first: Vec<Option<(usize, usize)>> = vec![None; inst.n()];
    for (i, c) in inst.constraints().iter().enumerate() {
        for (j, &v) in c.vars.iter().enumerate() {
            match first[v as usize] {
                None => first[v as usize] = Some((i, j)),
                Some((i0, j0)) => {
                    for s in 0..sigma - 1 {
                        let mut row = vec![0i64; lay.columns];
                        marginal_row(inst, &lay, i, j, s, 1, &mut row);
                        marginal_row(inst, &lay, i0, j0, s, -1, &mut row);
                        a.push(row);
                        b.push(0);
                    }
                }
            }
        }
    }
    let objective_of = |i: usize| -> Vec<(usize, i64)> {
        let p = inst.predicate(inst.constraints()[i].pred);
        (0..p.num_tuples())
            .filter(|&t| p.table()[t])
            .map(|t| (lay.offsets[i] + t, 1))
            .collect()
    };
    let mut c = vec![0i64; lay.columns];
    for i in 0..inst.m() {
        for (col, w) in objective_of(i) {
            c[col] += w;
        }
    }
    let sec = secondary.map(|center| {
        let mut c2 = vec![0i64; lay.columns];
        for (col, w) in objective_of(center) {
            c2[col] += w;
        }
        c2
    });
    let out = simplex::solve(&simplex::Problem { a, b, c, secondary: sec })?;
    Ok(Reduced {
        values: out.values,
        objective_count: out.objective,
        secondary: out.secondary,
    })
}

/// Solves the BasicLP of `inst` exactly.
pub fn solve_basic_lp(inst: &Instance) -> Result<LpSolution> {
    let red = solve_reduced(inst, None)?;
    let lay = layout(inst);
    let sigma = inst.sigma();
    let z: Vec<Vec<Rational>> = inst
        .constraints()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let len = inst.predicate(c.pred).num_tuples();
            red.values[lay.offsets[i]..lay.offsets[i] + len].to_vec()
        })
        .collect();
    let mut x = vec![vec![Rational::zero(); sigma]; inst.n()];
    let mut seen = vec![false; inst.n()];
    for (i, c) in inst.constraints().iter().enumerate() {
        let p = inst.predicate(c.pred);
        for (j, &v) in c.vars.iter().enumerate() {
            if seen[v as usize] {
                continue;
            }
            seen[v as usize] = true;
            x[v as usize] = marginals(p, &z[i], j, sigma);
        }
    }
    for (v, s) in seen.iter().enumerate() {
        if !s {
            x[v][0] = Rational::one();
        }
    }
    let objective = red.objective_count / Rational::from_integer(BigInt::from(inst.m()));
    Ok(LpSolution { x, z, objective })
}

fn marginals(p: &Predicate, z: &[Rational], j: usize, sigma: usize) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); sigma];
    let mut tuple = vec![0usize; p.arity()];
    for (b, zb) in z.iter().enumerate() {
        p.tuple(b, &mut tuple);
        out[tuple[j]] += zb;
    }
    out
}

/// BasicLP value together with the largest contribution
/// `Σ_b f_center(b)·z[center][b]` attainable among optimal solutions.
pub fn center_contribution(inst: &Instance, center: usize) -> Result<(Rational, Rational)> {
    if center >= inst.m() {
        return Err(Error::InvalidParameter(format!("center {center} out of range")));
    }
    let red = solve_reduced(inst, Some(center))?;
    let m = Rational::from_integer(BigInt::from(inst.m()));
    Ok((red.objective_count / m, red.secondary.expect("secondary requested")))
}

/// The BasicLP objective of an arbitrary `z`.
pub fn objective_of(inst: &Instance, z: &[Vec<Rational>]) -> Rational {
    let mut total = Rational::zero();
    for (i, c) in inst.constraints().iter().enumerate() {
        let p = inst.predicate(c.pred);
        for (b, zb) in z[i].iter().enumerate() {
            if p.table()[b] {
                total += zb;
            }
        }
    }
    total / Rational::from_integer(BigInt::from(inst.m().max(1)))
}

/// Checks every BasicLP constraint family to exact equality, plus
/// `Σ_b z[i][b] = 1`.
pub fn check_feasible(inst: &Instance, x: &[Vec<Rational>], z: &[Vec<Rational>]) -> bool {
    let sigma = inst.sigma();
    if x.len() != inst.n() || z.len() != inst.m() {
        return false;
    }
    if x.iter().flatten().chain(z.iter().flatten()).any(|r| r < &Rational::zero()) {
        return false;
    }
    if x.iter().any(|row| row.len() != sigma || row.iter().sum::<Rational>() != Rational::one()) {
        return false;
    }
    for (i, c) in inst.constraints().iter().enumerate() {
        let p = inst.predicate(c.pred);
        if z[i].len() != p.num_tuples() || z[i].iter().sum::<Rational>() != Rational::one() {
            return false;
        }
        for (j, &v) in c.vars.iter().enumerate() {
            if marginals(p, &z[i], j, sigma) != x[v as usize] {
                return false;
            }
        }
    }
    true
}

/// The integral point of an assignment: `x[v][τ(v)] = 1`, `z[i][τ|C_i] = 1`.
pub fn integral_point(inst: &Instance, tau: &[u8]) -> (Vec<Vec<Rational>>, Vec<Vec<Rational>>) {
    let sigma = inst.sigma();
    let x = tau
        .iter()
        .map(|&s| (0..sigma).map(|t| if t == s as usize { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    let z = inst
        .constraints()
        .iter()
        .map(|c| {
            let p = inst.predicate(c.pred);
            let vals: Vec<usize> = c.vars.iter().map(|&v| tau[v as usize] as usize).collect();
            let hit = p.index_of(&vals);
            (0..p.num_tuples()).map(|b| if b == hit { Rational::one() } else { Rational::zero() }).collect()
        })
        .collect();
    (x, z)
}

/// The full formulation as a CPLEX-style LP listing.
pub fn dump_lp(inst: &Instance) -> String {
    let sigma = inst.sigma();
    let mut out = String::new();
    let _ = writeln!(out, "\\ BasicLP: objective is scaled by m = {}", inst.m());
    let _ = writeln!(out, "Maximize");
    let mut terms = Vec::new();
    for (i, c) in inst.constraints().iter().enumerate() {
        let p = inst.predicate(c.pred);
        for b in 0..p.num_tuples() {
            if p.table()[b] {
                terms.push(format!("z_{i}_{b}"));
            }
        }
    }
    let _ = writeln!(out, " obj: {}", if terms.is_empty() { "0 z_0_0".to_string() } else { terms.join(" + ") });
    let _ = writeln!(out, "Subject To");
    for v in 0..inst.n() {
        let xs: Vec<String> = (0..sigma).map(|s| format!("x_{v}_{s}")).collect();
        let _ = writeln!(out, " sum_{v}: {} = 1", xs.join(" + "));
    }
    let mut tuple = Vec::new();
    for (i, c) in inst.constraints().iter().enumerate() {
        let p = inst.predicate(c.pred);
        tuple.resize(p.arity(), 0);
        for (j, &v) in c.vars.iter().enumerate() {
            for s in 0..sigma {
                let mut zs = Vec::new();
                for b in 0..p.num_tuples() {
                    p.tuple(b, &mut tuple);
                    if tuple[j] == s {
                        zs.push(format!("z_{i}_{b}"));
                    }
                }
                let _ = writeln!(out, " marg_{i}_{j}_{s}: {} - x_{v}_{s} = 0", zs.join(" + "));
            }
        }
    }
    let _ = writeln!(out, "End");
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaProvenance {
    Known,
    /// Minimum of `val/vallp` over sampled instances. This bounds the true
    /// infimum from above, so it is optimistic.
    Empirical,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralityGapEstimate {
    pub alpha: Rational,
    pub provenance: AlphaProvenance,
    pub instances: usize,
}

/// Known BasicLP integrality gaps by family name.
pub fn known_alpha(family: &str) -> Option<IntegralityGapEstimate> {
    match family {
        "maxdicut" => Some(IntegralityGapEstimate {
            alpha: ratio(1, 2),
            provenance: AlphaProvenance::Known,
            instances: 0,
        }),
        _ => None,
    }
}

/// Minimum of `val/vallp` over `extra` plus `trials` random instances drawn
/// from `family` with at most `n_max` variables.
pub fn empirical_alpha(
    family: &[Predicate],
    trials: usize,
    n_max: usize,
    extra: &[Instance],
    tape: &RandomTape,
) -> Result<IntegralityGapEstimate> {
    if trials == 0 && extra.is_empty() {
        return Err(Error::InvalidParameter("empirical_alpha needs at least one instance".into()));
    }
    if family.is_empty() && trials > 0 {
        return Err(Error::InvalidParameter("empty predicate family".into()));
    }
    let sigma = family.first().map(|p| p.sigma()).unwrap_or(2);
    let kmax = family.iter().map(|p| p.arity()).max().unwrap_or(1);
    let mut best = Rational::one();
    let mut count = 0;
    let mut consider = |inst: &Instance| -> Result<()> {
        let val = brute_force_val(inst)?;
        let lp = solve_basic_lp(inst)?.objective;
        if !lp.is_zero() {
            let r = val / lp;
            if r < best {
                best = r;
            }
        }
        count += 1;
        Ok(())
    };
    for inst in extra {
        consider(inst)?;
    }
    let alphabet = crate::csp::Alphabet::new(sigma)?;
    for trial in 0..trials as u64 {
        let draw = |tag: u64, n: u64| tape.index(Namespace::Generator, &[trial, tag], n);
        let n = (kmax.max(2) + draw(0, (n_max.max(kmax) - kmax.max(2) + 1) as u64) as usize).min(n_max.max(kmax));
        let m = 1 + draw(1, 2 * n as u64) as usize;
        let mut inst = Instance::new(n, alphabet);
        for c in 0..m as u64 {
            let p = &family[draw(2 + 3 * c, family.len() as u64) as usize];
            let id = inst.intern(p.clone())?;
            // Distinct variables: BasicLP cannot see that e.g. XOR(v, v) fails.
            let mut vars: Vec<u32> = Vec::with_capacity(p.arity());
            let mut attempt = 0u64;
            while vars.len() < p.arity() {
                let v = draw(3 + 3 * c + 1000 * (attempt + 1), n as u64) as u32;
                if !vars.contains(&v) || n < p.arity() {
                    vars.push(v);
                }
                attempt += 1;
            }
            inst.push(id, vars)?;
        }
        consider(&inst)?;
    }
    Ok(IntegralityGapEstimate { alpha: best, provenance: AlphaProvenance::Empirical, instances: count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csp::tests::triangle_maxcut;
    use crate::csp::{Alphabet, Assignment};

    #[test]
    fn single_xor_has_value_one() {
        let inst = Instance::from_constraints(2, Alphabet::new(2).unwrap(), vec![(Predicate::xor(), vec![0, 1])]).unwrap();
        let sol = solve_basic_lp(&inst).unwrap();
        assert_eq!(sol.objective, ratio(1, 1));
        assert!(check_feasible(&inst, &sol.x, &sol.z));
        assert_eq!(objective_of(&inst, &sol.z), sol.objective);
    }

    #[test]
    fn triangle_is_a_gap_instance() {
        let tri = triangle_maxcut();
        let sol = solve_basic_lp(&tri).unwrap();
        assert_eq!(sol.objective, ratio(1, 1));
        assert_eq!(brute_force_val(&tri).unwrap(), ratio(2, 3));
        assert!(check_feasible(&tri, &sol.x, &sol.z));
        for row in &sol.x {
            assert_eq!(row, &vec![ratio(1, 2), ratio(1, 2)]);
        }
    }

    #[test]
    fn all_false_has_value_zero() {
        let f = Predicate::constant(2, 3, false).unwrap();
        let inst = Instance::from_constraints(3, Alphabet::new(3).unwrap(), vec![(f.clone(), vec![0, 1]), (f, vec![1, 2])]).unwrap();
        assert_eq!(solve_basic_lp(&inst).unwrap().objective, ratio(0, 1));
    }

    #[test]
    fn integral_points_are_feasible() {
        let tri = triangle_maxcut();
        for code in 0..8u8 {
            let tau: Vec<u8> = (0..3).map(|b| (code >> b) & 1).collect();
            let (x, z) = integral_point(&tri, &tau);
            assert!(check_feasible(&tri, &x, &z));
            assert_eq!(objective_of(&tri, &z), evaluate_ratio(&tri, &tau));
        }
    }

    fn evaluate_ratio(inst: &Instance, tau: &[u8]) -> Rational {
        crate::csp::evaluate(inst, &Assignment::new(tau.to_vec())).unwrap()
    }

    #[test]
    fn repeated_variable_in_one_constraint() {
        // Marginal rows per position admit z split over (0,1) and (1,0), so
        // XOR(v, v) has LP value 1 while no assignment satisfies it.
        let inst = Instance::from_constraints(1, Alphabet::new(2).unwrap(), vec![(Predicate::xor(), vec![0, 0])]).unwrap();
        let sol = solve_basic_lp(&inst).unwrap();
        assert_eq!(sol.objective, ratio(1, 1));
        assert_eq!(brute_force_val(&inst).unwrap(), ratio(0, 1));
        assert!(check_feasible(&inst, &sol.x, &sol.z));
    }

    #[test]
    fn center_contribution_maximises_over_optimal_face() {
        // x0 = 1 and x0 = 0 split one unit of mass; every split is optimal.
        let one = Predicate::from_fn(1, 2, |b| b[0] == 1).unwrap();
        let zero = Predicate::from_fn(1, 2, |b| b[0] == 0).unwrap();
        let inst = Instance::from_constraints(1, Alphabet::new(2).unwrap(), vec![(one, vec![0]), (zero, vec![0])]).unwrap();
        for center in 0..2 {
            let (val, c) = center_contribution(&inst, center).unwrap();
            assert_eq!(val, ratio(1, 2));
            assert_eq!(c, ratio(1, 1));
        }
    }

    #[test]
    fn alpha_known_and_empirical() {
        let k = known_alpha("maxdicut").unwrap();
        assert_eq!(k.alpha, ratio(1, 2));
        assert_eq!(k.provenance, AlphaProvenance::Known);
        let t = Predicate::constant(2, 2, true).unwrap();
        let e = empirical_alpha(&[t], 10, 5, &[], &RandomTape::new(1)).unwrap();
        assert_eq!(e.alpha, ratio(1, 1));
        let e = empirical_alpha(&[Predicate::xor()], 5, 5, &[triangle_maxcut()], &RandomTape::new(1)).unwrap();
        assert!(e.alpha <= ratio(2, 3));
    }

    #[test]
    fn lp_dump_lists_all_families() {
        let text = dump_lp(&triangle_maxcut());
        assert!(text.contains("sum_2: x_2_0 + x_2_1 = 1"));
        assert!(text.contains("marg_0_1_0: z_0_0 + z_0_2 - x_1_0 = 0"));
        assert!(text.starts_with("\\ BasicLP"));
    }

    #[test]
    fn solution_json_uses_explicit_fractions() {
        let sol = solve_basic_lp(&triangle_maxcut()).unwrap();
        let j = sol.to_json();
        assert_eq!(j["objective"], "1/1");
        assert_eq!(j["x"][0][0], "1/2");
    }
}
