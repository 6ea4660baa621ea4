//! Single-pass, sublinear-space estimation of the Max-CSP value.
//!
//! The pipeline reduces an instance to bounded expected degree, samples it in
//! two tiers (whole low-degree parents by hash, individual high-degree copies
//! by coin flip) and averages a local map over neighbourhoods of sampled
//! constraint copies. The same estimator runs offline and as a one-pass
//! streaming sketch; both read one keyed [`tape::RandomTape`], so their
//! outputs can be compared run by run.

pub mod csp;
pub mod error;
pub mod gen;
pub mod harness;
pub mod hash;
pub mod local;
pub mod lp;
pub mod reduced;
pub mod reduction;
pub mod reservoir;
pub mod stats;
pub mod streaming;
pub mod tape;

pub use csp::{
    brute_force_val, degree, evaluate, exact_val, Alphabet, Assignment, Constraint, Instance,
    PredId, Predicate, PredicateRegistry, Rational,
};
pub use error::{Error, Result};
pub use local::{ALocMap, CachedALoc, ExactValALoc, LpALoc, NeighborhoodBall};
pub use lp::{solve_basic_lp, LpSolution};
pub use reduced::{ConstraintCopyId, CopyKey, ReducedInstance, Tier, VarCopy};
pub use reduction::{offline_estimate, EstimatorConfig, Params};
pub use streaming::{coupled_run, m_guess_wrapper, streaming_estimate};
pub use tape::{Namespace, RandomTape};
