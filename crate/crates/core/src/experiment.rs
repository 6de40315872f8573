//! Multi-seed experiment driver.
//!
//! Every `(policy, seed)` pair is an independent job owning its own policy,
//! random streams and trace. Jobs sharing a seed see the same threshold
//! sequence, so comparisons between policies are paired. Random streams are
//! carved out of one ChaCha8 key per seed by stream number:
//!
//! | stream            | use                                  |
//! |-------------------|--------------------------------------|
//! | 0                 | constraint thresholds                |
//! | `id`              | policy randomness                    |
//! | `NOISE_BASE + id` | reward noise for that policy's run   |
//!
//! where `id` is [`PolicyKind::stream_id`], so adding or removing a policy
//! never perturbs another one's draws.

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{ExperimentConfig, PolicyKind};
use crate::environment::{RoundRecord, ScheduleKind, WirelessEnvironment};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, clairvoyant, compute_curves, AggregateCurves, ClairvoyantOptimum, MetricCurves};
use crate::policy::{budget_at, violation_rate, BanditPolicy, ViolationLedger};

const THRESHOLD_STREAM: u64 = 0;
const NOISE_BASE: u64 = 1 << 32;

/// How independent jobs are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// One job after another on the calling thread.
    Sequential,
    /// Jobs spread over the rayon pool. Falls back to sequential execution
    /// when the crate is built without the `parallel` feature.
    #[default]
    Parallel,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Maps `f` over `items`, preserving order.
fn map_jobs<T, R, F>(items: Vec<T>, exec: Execution, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.into_par_iter().map(f).collect()
        }
        _ => items.into_iter().map(f).collect(),
    }
}

/// Thresholds and oracle for one seed, shared by every policy.
#[derive(Debug, Clone)]
pub struct SeedContext {
    pub seed: u64,
    pub thresholds: Vec<f64>,
    pub oracle: ClairvoyantOptimum,
}

impl SeedContext {
    pub fn new(env: &WirelessEnvironment, seed: u64) -> Result<Self> {
        let thresholds = env.thresholds(&mut stream(seed, THRESHOLD_STREAM))?;
        let oracle = clairvoyant(env.grid(), env.link(), &thresholds)?;
        Ok(SeedContext {
            seed,
            thresholds,
            oracle,
        })
    }
}

/// Trace and curves of a single `(policy, seed)` run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub policy: PolicyKind,
    pub seed: u64,
    pub records: Vec<RoundRecord>,
    pub curves: MetricCurves,
}

/// A run that did not complete.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFailure {
    pub policy: PolicyKind,
    pub seed: u64,
    pub message: String,
}

/// Plays one policy through the full protocol on a prepared seed.
///
/// Per round: read `C_t`, select, step the environment, feed the scaled
/// reward and the cost back, log the record. Budget and empirical rate are
/// logged for every policy, computed from the harness's own ledger over
/// completed rounds.
pub fn run_single(
    config: &ExperimentConfig,
    env: &WirelessEnvironment,
    ctx: &SeedContext,
    policy: &mut dyn BanditPolicy,
) -> Result<RunTrace> {
    let kind = policy.kind();
    let budget = config.budget_schedule()?;
    let scale = config.learner_reward_scale_or_default();
    let mut policy_rng = stream(ctx.seed, kind.stream_id());
    let mut noise_rng = stream(ctx.seed, NOISE_BASE + kind.stream_id());
    let mut ledger = ViolationLedger::new();
    let mut records = Vec::with_capacity(ctx.thresholds.len());

    for (i, &threshold) in ctx.thresholds.iter().enumerate() {
        let t = i as u64 + 1;
        let delta = budget_at(&budget, t);
        let empirical_rate = violation_rate(&ledger);
        let selection = policy.select(t, threshold, &mut policy_rng)?;
        let (reward, cost) = env.step(selection.arm, &mut noise_rng)?;
        policy.observe(selection.arm, reward * scale, cost, threshold);
        let violated = ledger.record(cost, threshold);
        records.push(RoundRecord {
            t,
            threshold,
            arm: selection.arm,
            reward,
            cost,
            violated,
            mode: selection.mode,
            budget: delta,
            empirical_rate,
        });
    }
    let curves = compute_curves(&records, &ctx.oracle, config.lambda)?;
    Ok(RunTrace {
        policy: kind,
        seed: ctx.seed,
        records,
        curves,
    })
}

type PolicyFactory<'a> = dyn Fn(PolicyKind) -> Result<Box<dyn BanditPolicy>> + Sync + 'a;

fn run_job(
    config: &ExperimentConfig,
    env: &WirelessEnvironment,
    ctx: &SeedContext,
    kind: PolicyKind,
    build: &PolicyFactory<'_>,
) -> Result<RunTrace, RunFailure> {
    let fail = |message: String| RunFailure {
        policy: kind,
        seed: ctx.seed,
        message,
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        let mut policy = build(kind)?;
        run_single(config, env, ctx, policy.as_mut())
    }));
    match outcome {
        Ok(Ok(trace)) => Ok(trace),
        Ok(Err(e)) => Err(fail(e.to_string())),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            Err(fail(format!("panicked: {msg}")))
        }
    }
}

/// Everything one experiment produced.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub config: ExperimentConfig,
    /// Ordered by policy (config order), then seed (config order).
    pub runs: Vec<RunTrace>,
    pub failures: Vec<RunFailure>,
    /// One entry per policy with at least one completed run, in config order.
    pub aggregates: Vec<(PolicyKind, AggregateCurves)>,
}

impl RunArtifact {
    pub fn aggregate_for(&self, policy: PolicyKind) -> Option<&AggregateCurves> {
        self.aggregates.iter().find(|(p, _)| *p == policy).map(|(_, a)| a)
    }

    pub fn runs_for(&self, policy: PolicyKind) -> impl Iterator<Item = &RunTrace> {
        self.runs.iter().filter(move |r| r.policy == policy)
    }

    pub fn manifest(&self) -> String {
        let mut out = String::from("# budgeted-bandit run manifest\n");
        out.push_str(&format!("code_version = {}\n", crate::CODE_VERSION));
        out.push_str(&self.config.to_kv_string());
        out
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifact> {
    run_experiment_with(config, Execution::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, exec: Execution) -> Result<RunArtifact> {
    config.validate()?;
    let env = config.environment()?;
    let contexts = map_jobs(config.seeds.clone(), exec, |seed| SeedContext::new(&env, seed))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(PolicyKind, &SeedContext)> = config
        .policies
        .iter()
        .flat_map(|&p| contexts.iter().map(move |ctx| (p, ctx)))
        .collect();
    let build = |kind| config.build_policy(kind);
    let outcomes = map_jobs(jobs, exec, |(kind, ctx)| run_job(config, &env, ctx, kind, &build));

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(trace) => runs.push(trace),
            Err(failure) => {
                log::error!(
                    "run {}/seed {} failed: {}",
                    failure.policy,
                    failure.seed,
                    failure.message
                );
                failures.push(failure);
            }
        }
    }

    let mut aggregates = Vec::new();
    for &policy in &config.policies {
        let curves: Vec<MetricCurves> = runs
            .iter()
            .filter(|r| r.policy == policy)
            .map(|r| r.curves.clone())
            .collect();
        if !curves.is_empty() {
            aggregates.push((policy, aggregate(&curves)?));
        }
    }
    Ok(RunArtifact {
        config: config.clone(),
        runs,
        failures,
        aggregates,
    })
}

/// Mean final objective per `(policy, K)` under the linear schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalabilityTable {
    pub arm_counts: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    /// `mean_final_objective[k][p]` for `arm_counts[k]`, `policies[p]`.
    pub mean_final_objective: Vec<Vec<f64>>,
    pub failures: Vec<(usize, RunFailure)>,
}

impl ScalabilityTable {
    pub fn value(&self, arms: usize, policy: PolicyKind) -> Option<f64> {
        let k = self.arm_counts.iter().position(|&a| a == arms)?;
        let p = self.policies.iter().position(|&q| q == policy)?;
        Some(self.mean_final_objective[k][p])
    }
}

pub fn run_scalability(config: &ExperimentConfig, arm_counts: &[usize]) -> Result<ScalabilityTable> {
    run_scalability_with(config, arm_counts, Execution::default())
}

pub fn run_scalability_with(config: &ExperimentConfig, arm_counts: &[usize], exec: Execution) -> Result<ScalabilityTable> {
    if arm_counts.is_empty() {
        return Err(Error::config("arm_counts", "need at least one K"));
    }
    let mut rows = Vec::with_capacity(arm_counts.len());
    let mut failures = Vec::new();
    for &k in arm_counts {
        let cfg = ExperimentConfig {
            num_arms: k,
            schedule: ScheduleKind::LinearVShape,
            ..config.clone()
        };
        let artifact = run_experiment_with(&cfg, exec)?;
        rows.push(
            config
                .policies
                .iter()
                .map(|&p| {
                    artifact
                        .aggregate_for(p)
                        .and_then(|a| a.overall_objective.last_mean())
                        .unwrap_or(f64::NAN)
                })
                .collect(),
        );
        failures.extend(artifact.failures.into_iter().map(|f| (k, f)));
    }
    Ok(ScalabilityTable {
        arm_counts: arm_counts.to_vec(),
        policies: config.policies.clone(),
        mean_final_objective: rows,
        failures,
    })
}
