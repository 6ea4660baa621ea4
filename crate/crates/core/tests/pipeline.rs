use proptest::prelude::*;

use cspstream::csp::{parse_instance, write_instance};
use cspstream::gen::{generate, Family, GenSpec};
use cspstream::local::extract_ball;
use cspstream::reduction::{compute_tiering, reduce_with};
use cspstream::{
    brute_force_val, evaluate, exact_val, solve_basic_lp, ALocMap, Assignment, CopyKey, EstimatorConfig, LpALoc,
    RandomTape, ReducedInstance,
};

fn family(i: u8) -> Family {
    [Family::MaxCut, Family::MaxDiCut, Family::KSat, Family::Random][i as usize % 4]
}

fn reduced(fam: u8, n: usize, m: usize, b: usize, seed: u64) -> ReducedInstance {
    let inst = generate(&GenSpec::new(family(fam), n, m).seed(seed)).unwrap();
    let cfg = EstimatorConfig { b: Some(b), epsilon: 0.5, seed, ..Default::default() };
    let params = cfg.resolve(inst.n(), inst.k(), inst.sigma(), Some(inst.m())).unwrap();
    let tape = RandomTape::new(seed);
    reduce_with(&inst, &compute_tiering(&inst, &params, &tape), &params, &tape).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn text_format_round_trips(fam in 0u8..4, n in 3usize..12, extra in 0usize..10, seed in any::<u64>()) {
        let inst = generate(&GenSpec::new(family(fam), n, n + extra).seed(seed)).unwrap();
        let text = write_instance(&inst);
        prop_assert_eq!(write_instance(&parse_instance(&text).unwrap()), text);
    }

    #[test]
    fn assignments_lie_below_val_and_lp(fam in 0u8..4, n in 3usize..9, extra in 0usize..6, seed in any::<u64>(), bits in any::<u64>()) {
        let inst = generate(&GenSpec::new(family(fam), n, n + extra).seed(seed)).unwrap();
        let tau = Assignment::new((0..n).map(|i| ((bits >> i) & 1) as u8).collect());
        let v = brute_force_val(&inst).unwrap();
        prop_assert!(evaluate(&inst, &tau).unwrap() <= v);
        prop_assert_eq!(exact_val(&inst).unwrap(), v.clone());
        prop_assert!(v <= solve_basic_lp(&inst).unwrap().objective);
    }

    #[test]
    fn degree_bounding_is_idempotent(fam in 0u8..4, n in 4usize..12, b in 1usize..5, cap in 1usize..6, seed in any::<u64>()) {
        let red = reduced(fam, n, 2 * n, b, seed);
        let (once, degs) = red.bound_degree(cap);
        prop_assert!(degs.iter().all(|&d| d <= cap));
        let (twice, _) = once.bound_degree(cap);
        prop_assert_eq!(once.signature(), twice.signature());
    }

    #[test]
    fn balls_grow_with_radius(fam in 0u8..4, n in 4usize..12, b in 1usize..4, seed in any::<u64>(), pick in any::<usize>()) {
        let red = reduced(fam, n, 2 * n, b, seed);
        let center = red.constraints()[pick % red.constraints().len()].id;
        let mut prev = extract_ball(&red, center, 0).unwrap();
        for r in 1..4 {
            let ball = extract_ball(&red, center, r).unwrap();
            prop_assert!(prev.constraints.iter().all(|c| ball.contains(c.id)));
            prev = ball;
        }
    }

    #[test]
    fn relabeling_copies_keeps_balls(fam in 0u8..4, n in 4usize..10, b in 1usize..4, seed in any::<u64>(), pick in any::<usize>()) {
        let red = reduced(fam, n, 2 * n, b, seed);
        let shift = |k: CopyKey| CopyKey::new(k.parent, k.copy + 1000);
        let moved = red.relabel(shift);
        let center = red.constraints()[pick % red.constraints().len()].id;
        let a = extract_ball(&red, center, 1).unwrap();
        let c = extract_ball(&moved, center, 1).unwrap();
        prop_assert_eq!(a.canonical_key(), c.canonical_key());
        prop_assert_eq!(LpALoc.evaluate(&a).unwrap(), LpALoc.evaluate(&c).unwrap());
    }
}
