//! Degree reduction, the offline two-tier estimator, and aggregation.

pub mod aggregate;
pub mod config;
pub mod offline;
pub mod policy;
pub mod sample;
pub mod trevisan;

pub use aggregate::{aggregate, bound_sampled, degree_map, exhaustive_mean, AggregateReport};
pub use config::{CsetSampler, EstimatorConfig, Params, PolicyKind, Wiring};
pub use offline::{offline_estimate, offline_run, Estimate, OfflineRun};
pub use policy::{compute_tiering, dtilde_from_gtilde, Tiering};
pub use sample::{offline_sample, sample_cset, sample_hash};
pub use trevisan::{copy_sample_set, reduce_with, retention_ratio, trevisan_reduce, trevisan_reduce_coupled};
