//! Constrained multi-armed bandits with a decaying violation budget.
//!
//! The crate is organised around a single sequential decision protocol:
//!
//! 1. the environment issues a constraint threshold `C_t`,
//! 2. a [`BanditPolicy`] picks an arm,
//! 3. the environment answers with a reward and a cost,
//! 4. the policy updates its state and the harness logs a [`RoundRecord`].
//!
//! [`policy`] holds Budgeted UCB, which explores freely while its empirical
//! violation rate stays below a linearly decaying budget and otherwise falls
//! back to arms whose cost upper confidence bound respects the threshold.
//! [`baselines`] holds the comparison policies (UCB1, Gaussian Thompson
//! sampling, epsilon-greedy and a virtual-queue penalty policy).
//! [`environment`] simulates a battery-powered transmitter choosing among
//! discrete power levels, [`metrics`] turns traces into violation, objective
//! and regret curves, and [`experiment`] runs multi-seed comparisons, in
//! parallel when the `parallel` feature is enabled.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod config;
pub mod environment;
mod error;
pub mod experiment;
pub mod metrics;
pub mod output;
pub mod policy;

pub use baselines::{EpsilonGreedy, ThompsonSampling, Ucb1, VirtualQueuePolicy};
pub use config::{ExperimentConfig, PolicyKind};
pub use environment::{RoundRecord, ScheduleKind, WirelessEnvironment};
pub use error::{Error, Result};
pub use experiment::{run_experiment, run_scalability, Execution, RunArtifact};
pub use metrics::{AggregateCurves, MetricCurves};
pub use policy::{BanditPolicy, BudgetedUcb, Mode, PolicyDecision, Selection};

/// Version string recorded in every run manifest.
pub const CODE_VERSION: &str = concat!("budgeted-bandit ", env!("CARGO_PKG_VERSION"));
