//! Drifts, the controlled change of variables and the variational objectives.

mod controlled;
mod drift;
mod evaluate;
mod optimize;
mod policy;
mod potential;
mod upsilon;

pub use controlled::{controlled_decompose, CausalState, ControlledPath};
pub use drift::{integrate_drift, integrate_drift_spectral, DriftPath};
pub use evaluate::{functional_2d, stochastic_offset, Evaluator, SampleEvaluation};
pub use optimize::{evaluate_policy, optimize, OptimizeOptions, OptimizeResult, TraceRow, EVAL_STREAM_OFFSET};
pub use policy::{explicit_drift, split_radius, DriftPolicy, ExplicitOptions, FeedbackPolicy};
pub use potential::{potential, FSpec, PotentialConfig, TerminalConstants};
pub use upsilon::{upsilon_terms, UpsilonMode, UpsilonTerms};
