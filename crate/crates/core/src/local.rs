//! Neighbourhood balls on reduced instances and the local maps evaluated
//! on them.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num::{BigInt, Zero};

use crate::csp::{self, Alphabet, Instance, PredId, Predicate, PredicateRegistry, Rational};
use crate::error::{Error, Result};
use crate::lp::center_contribution;
use crate::reduced::{ConstraintCopyId, CopyKey, ReducedInstance, Tier, VarCopy};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallConstraint {
    pub id: ConstraintCopyId,
    pub pred: PredId,
    /// Indices into [`NeighborhoodBall::copies`].
    pub vars: Vec<u32>,
    pub dummy: bool,
    /// Hop distance from the center.
    pub layer: usize,
}

/// The constraint copies within `radius` hops of a center, where two
/// constraints are one hop apart when they share a variable copy.
#[derive(Clone, Debug)]
pub struct NeighborhoodBall {
    pub center: ConstraintCopyId,
    pub radius: usize,
    /// Copies in order of first appearance.
    pub copies: Vec<VarCopy>,
    /// Layer of the constraint through which each copy entered.
    pub var_layer: Vec<usize>,
    /// Center first, then by layer and constraint id.
    pub constraints: Vec<BallConstraint>,
    /// Degree of each copy in the instance the ball was cut from.
    pub degree: Vec<usize>,
    alphabet: Alphabet,
    preds: Arc<PredicateRegistry>,
}

/// Breadth-first ball of radius `r` around `center`; ties are broken by
/// constraint id and then position.
pub fn extract_ball(red: &ReducedInstance, center: ConstraintCopyId, r: usize) -> Result<NeighborhoodBall> {
    let ci = red
        .constraint_position(center)
        .ok_or(Error::UnknownConstraintCopy(center))?;
    let mut local: HashMap<u32, u32> = HashMap::new();
    let mut copies = Vec::new();
    let mut var_layer = Vec::new();
    let mut degree = Vec::new();
    let mut order: Vec<u32> = Vec::new();
    let mut in_ball: HashMap<u32, ()> = HashMap::new();
    let mut constraints = Vec::new();

    let mut admit = |cidx: u32,
                     layer: usize,
                     local: &mut HashMap<u32, u32>,
                     copies: &mut Vec<VarCopy>,
                     var_layer: &mut Vec<usize>,
                     degree: &mut Vec<usize>,
                     order: &mut Vec<u32>| {
        let c = &red.constraints()[cidx as usize];
        let vars = c
            .vars
            .iter()
            .map(|&v| {
                *local.entry(v).or_insert_with(|| {
                    copies.push(red.copies()[v as usize]);
                    var_layer.push(layer);
                    degree.push(red.degree(v as usize));
                    order.push(v);
                    (copies.len() - 1) as u32
                })
            })
            .collect();
        constraints.push(BallConstraint { id: c.id, pred: c.pred, vars, dummy: c.dummy, layer });
    };

    in_ball.insert(ci as u32, ());
    admit(ci as u32, 0, &mut local, &mut copies, &mut var_layer, &mut degree, &mut order);
    for layer in 1..=r {
        let frontier: Vec<u32> = order
            .iter()
            .zip(&var_layer)
            .filter(|(_, &l)| l == layer - 1)
            .map(|(&v, _)| v)
            .collect();
        let mut next: Vec<u32> = frontier
            .iter()
            .flat_map(|&v| red.adjacent(v as usize).iter().copied())
            .filter(|c| !in_ball.contains_key(c))
            .collect();
        next.sort_unstable();
        next.dedup();
        if next.is_empty() {
            break;
        }
        for c in next {
            in_ball.insert(c, ());
            admit(c, layer, &mut local, &mut copies, &mut var_layer, &mut degree, &mut order);
        }
    }
    Ok(NeighborhoodBall {
        center,
        radius: r,
        copies,
        var_layer,
        constraints,
        degree,
        alphabet: red.alphabet(),
        preds: red.predicates().clone(),
    })
}

impl NeighborhoodBall {
    pub fn predicate(&self, id: PredId) -> &Predicate {
        self.preds.get(id)
    }

    pub fn center_constraint(&self) -> &BallConstraint {
        &self.constraints[0]
    }

    /// True when the center can never be satisfied.
    pub fn center_is_false(&self) -> bool {
        let c = self.center_constraint();
        c.dummy || self.predicate(c.pred).trivially_false()
    }

    /// The ball as a plain instance; constraint 0 is the center.
    pub fn to_instance(&self) -> Instance {
        let mut inst = Instance::new(self.copies.len(), self.alphabet);
        for c in &self.constraints {
            let p = self.predicate(c.pred);
            let p = if c.dummy {
                Predicate::constant(p.arity(), p.sigma(), false).expect("valid arity")
            } else {
                p.clone()
            };
            let id = inst.intern(p).expect("same alphabet");
            inst.push(id, c.vars.clone()).expect("local indices in range");
        }
        inst
    }

    /// Text form plus one `tier <parent> <low|high>` line per copy.
    pub fn serialize(&self) -> String {
        let mut out = csp::write_instance(&self.to_instance());
        for c in &self.copies {
            let _ = writeln!(out, "tier {} {}", c.parent, c.tier);
        }
        out
    }

    /// Structural key: equal keys imply isomorphic balls.
    pub fn canonical_key(&self) -> String {
        let mut key = String::new();
        let _ = write!(key, "s{}|", self.alphabet.size());
        for c in &self.constraints {
            if c.dummy {
                key.push('!');
            }
            key.push_str(&self.predicate(c.pred).bitstring());
            for v in &c.vars {
                let _ = write!(key, ",{v}");
            }
            key.push(';');
        }
        key
    }

    pub fn contains(&self, id: ConstraintCopyId) -> bool {
        self.constraints.iter().any(|c| c.id == id)
    }

    pub fn copy_keys(&self) -> Vec<CopyKey> {
        self.copies.iter().map(|c| c.key()).collect()
    }
}

/// Number of high-tier copies plus distinct parents of low-tier copies.
pub fn count_dependencies(ball: &NeighborhoodBall) -> Result<usize> {
    if ball.copies.is_empty() {
        return Err(Error::EmptyBall);
    }
    let high = ball.copies.iter().filter(|c| c.tier == Tier::High).count();
    let mut low: Vec<u32> = ball
        .copies
        .iter()
        .filter(|c| c.tier == Tier::Low)
        .map(|c| c.parent)
        .collect();
    low.sort_unstable();
    low.dedup();
    Ok(high + low.len())
}

/// True iff every copy within `radius - 1` hops has its full recorded
/// degree inside the instance the ball was cut from.
pub fn ball_is_fully_sampled(
    ball: &NeighborhoodBall,
    recorded: impl Fn(CopyKey) -> Option<usize>,
) -> Result<bool> {
    for (i, c) in ball.copies.iter().enumerate() {
        if ball.var_layer[i] + 1 > ball.radius {
            continue;
        }
        let want = recorded(c.key()).ok_or(Error::MissingDegree { parent: c.parent, copy: c.copy_index })?;
        if ball.degree[i] != want {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A deterministic map from balls to `[0, 1]` that depends only on the
/// isomorphism class of the ball.
pub trait ALocMap: Send + Sync {
    fn evaluate(&self, ball: &NeighborhoodBall) -> Result<f64>;
}

/// BasicLP on the ball; reports the largest center contribution
/// `Σ_b f(b)·z[center][b]` over all optimal LP solutions.
#[derive(Clone, Copy, Debug, Default)]
pub struct LpALoc;

impl LpALoc {
    pub fn exact(&self, ball: &NeighborhoodBall) -> Result<Rational> {
        if ball.center_is_false() {
            return Ok(Rational::zero());
        }
        Ok(center_contribution(&ball.to_instance(), 0)?.1)
    }
}

impl ALocMap for LpALoc {
    fn evaluate(&self, ball: &NeighborhoodBall) -> Result<f64> {
        Ok(csp::rational_value(&self.exact(ball)?))
    }
}

/// Exact optimum of the ball's live constraints divided by their number.
/// Averaged over all centers of a connected component whose balls cover the
/// component, this reproduces the component's exact value.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactValALoc;

impl ExactValALoc {
    pub fn exact(&self, ball: &NeighborhoodBall) -> Result<Rational> {
        if ball.center_is_false() {
            return Ok(Rational::zero());
        }
        let inst = ball.to_instance();
        let live = ball.constraints.iter().filter(|c| !c.dummy).count();
        let best = csp::exact_val(&inst)? * Rational::from_integer(BigInt::from(inst.m()));
        Ok(best / Rational::from_integer(BigInt::from(live)))
    }
}

impl ALocMap for ExactValALoc {
    fn evaluate(&self, ball: &NeighborhoodBall) -> Result<f64> {
        Ok(csp::rational_value(&self.exact(ball)?))
    }
}

/// Memoises an inner map by [`NeighborhoodBall::canonical_key`].
#[derive(Debug, Default)]
pub struct CachedALoc<M> {
    inner: M,
    cache: Mutex<HashMap<String, f64>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl<M: ALocMap> CachedALoc<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

impl<M: ALocMap> ALocMap for CachedALoc<M> {
    fn evaluate(&self, ball: &NeighborhoodBall) -> Result<f64> {
        let key = ball.canonical_key();
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        let v = self.inner.evaluate(ball)?;
        self.misses.fetch_add(1, Ordering::Relaxed);
        self.cache.lock().expect("cache lock").insert(key, v);
        Ok(v)
    }
}

impl<M: ALocMap + ?Sized> ALocMap for &M {
    fn evaluate(&self, ball: &NeighborhoodBall) -> Result<f64> {
        (**self).evaluate(ball)
    }
}

impl<M: ALocMap + ?Sized> ALocMap for Arc<M> {
    fn evaluate(&self, ball: &NeighborhoodBall) -> Result<f64> {
        (**self).evaluate(ball)
    }
}
