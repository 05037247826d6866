//! Benchmark environments, baseline algorithms, bound evaluation, trace
//! recording, and experiment execution.
//!
//! The contract is deterministic: an environment spec plus a seed fully
//! determines the loss stream, and identical runs produce byte-identical
//! CSV traces. The per-round CSV schema is
//! `t,b_t,B_t,active_slaves,potential,restart,regret_best,bound,slack`
//! with empty cells for fields an algorithm does not produce.

pub mod baselines;
pub mod bounds;
pub mod comparator;
pub mod config;
pub mod env;
pub mod runner;
pub mod trace;
pub mod verify;

pub use config::{AlgorithmSpec, EnvironmentKind, EnvironmentSpec, ExperimentConfig, ScaleJump};
pub use env::{DomainKind, OcoLoss, Sampler, Setting, Stream};
pub use runner::{run_experiment, RunOptions};
pub use trace::{ExperimentSummary, ExperimentTrace, TraceRow};
pub use verify::CheckOutcome;
