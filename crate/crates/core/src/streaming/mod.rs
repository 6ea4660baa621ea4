//! The one-pass sketch, its reduction, and the wrappers around it.

pub mod coupled;
pub mod estimate;
pub mod mguess;
pub mod reduce;
pub mod sketch;

pub use coupled::{coupled_run, CoupledOutcome, CouplingDiagnostics};
pub use estimate::{stream_run, streaming_estimate, StreamRun};
pub use mguess::{level_of, m_guess_wrapper, target_m, LevelStatus, MGuessOutcome};
pub use reduce::{streaming_reduction, HighVar, StreamReduction};
pub use sketch::{instance_stream, permuted_stream, sketch_stream, Sketch, SketchBuilder, SketchComponents, StreamHeader, StreamItem};
