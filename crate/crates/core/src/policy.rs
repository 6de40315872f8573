//! Budgeted UCB: per-arm statistics, reward and cost confidence indices, the
//! decaying violation budget and the three-way selection rule.

use std::fmt::{self, Write as _};

use rand::RngCore;

use crate::config::PolicyKind;
use crate::error::{Error, Result};

/// Running totals for one arm. Sums are kept as totals; means are derived.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArmStats {
    play_count: u64,
    reward_sum: f64,
    cost_sum: f64,
}

impl ArmStats {
    pub const fn new() -> Self {
        ArmStats {
            play_count: 0,
            reward_sum: 0.0,
            cost_sum: 0.0,
        }
    }

    /// Builds statistics from stored totals, rejecting states no sequence of
    /// updates could produce.
    pub fn from_totals(play_count: u64, reward_sum: f64, cost_sum: f64) -> Result<Self> {
        if !reward_sum.is_finite() || !cost_sum.is_finite() {
            return Err(Error::param("arm_stats", "sums must be finite"));
        }
        if play_count == 0 && (reward_sum != 0.0 || cost_sum != 0.0) {
            return Err(Error::param("arm_stats", "unplayed arm with nonzero sums"));
        }
        Ok(ArmStats {
            play_count,
            reward_sum,
            cost_sum,
        })
    }

    pub fn play_count(&self) -> u64 {
        self.play_count
    }

    pub fn reward_sum(&self) -> f64 {
        self.reward_sum
    }

    pub fn cost_sum(&self) -> f64 {
        self.cost_sum
    }

    pub fn sum(&self, signal: Signal) -> f64 {
        match signal {
            Signal::Reward => self.reward_sum,
            Signal::Cost => self.cost_sum,
        }
    }

    /// Empirical mean of a signal, `None` for an unplayed arm.
    pub fn mean(&self, signal: Signal) -> Option<f64> {
        (self.play_count > 0).then(|| self.sum(signal) / self.play_count as f64)
    }

    pub fn record(&mut self, reward: f64, cost: f64) {
        self.play_count += 1;
        self.reward_sum += reward;
        self.cost_sum += cost;
    }
}

/// Which feedback stream an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signal {
    Reward,
    Cost,
}

/// `δ_t = δ_0 (1 - (t-1)/T_bud)`, clamped at zero once the budget is spent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetSchedule {
    delta0: f64,
    budget_horizon: u64,
}

impl BudgetSchedule {
    pub fn new(delta0: f64, budget_horizon: u64) -> Result<Self> {
        if !(delta0 > 0.0 && delta0 < 1.0) {
            return Err(Error::param("delta0", format!("must lie in (0, 1), got {delta0}")));
        }
        if budget_horizon == 0 {
            return Err(Error::param("budget_horizon", "must be positive"));
        }
        Ok(BudgetSchedule {
            delta0,
            budget_horizon,
        })
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn budget_horizon(&self) -> u64 {
        self.budget_horizon
    }
}

/// Completed-round violation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ViolationLedger {
    rounds_seen: u64,
    violation_count: u64,
}

impl ViolationLedger {
    pub const fn new() -> Self {
        ViolationLedger {
            rounds_seen: 0,
            violation_count: 0,
        }
    }

    pub fn from_counts(rounds_seen: u64, violation_count: u64) -> Result<Self> {
        if violation_count > rounds_seen {
            return Err(Error::param(
                "violation_ledger",
                format!("{violation_count} violations in {rounds_seen} rounds"),
            ));
        }
        Ok(ViolationLedger {
            rounds_seen,
            violation_count,
        })
    }

    pub fn rounds_seen(&self) -> u64 {
        self.rounds_seen
    }

    pub fn violation_count(&self) -> u64 {
        self.violation_count
    }

    /// Records one completed round; returns whether it was a violation.
    pub fn record(&mut self, cost: f64, threshold: f64) -> bool {
        let violated = cost > threshold;
        self.rounds_seen += 1;
        self.violation_count += u64::from(violated);
        violated
    }
}

/// The branch of the selection rule that produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Empirical rate within budget: maximise the reward index.
    Explore,
    /// Over budget: maximise the reward index among arms whose cost index fits the threshold.
    SafeExplore,
    /// Over budget with no arm that looks safe: minimise the cost index.
    MinViolation,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Explore => "explore",
            Mode::SafeExplore => "safe_explore",
            Mode::MinViolation => "min_violation",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyDecision {
    pub arm: usize,
    pub mode: Mode,
}

/// Arm chosen by any policy. Only Budgeted UCB reports a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub arm: usize,
    pub mode: Option<Mode>,
}

impl From<PolicyDecision> for Selection {
    fn from(d: PolicyDecision) -> Self {
        Selection {
            arm: d.arm,
            mode: Some(d.mode),
        }
    }
}

/// Upper confidence index `S/N + sqrt(2 ln t / N)`; `+∞` for an unplayed arm.
pub fn ucb_index(stats: &ArmStats, t: u64, signal: Signal) -> f64 {
    debug_assert!(t >= 1, "rounds are 1-based");
    if stats.play_count == 0 {
        return f64::INFINITY;
    }
    let n = stats.play_count as f64;
    stats.sum(signal) / n + (2.0 * (t as f64).ln() / n).sqrt()
}

pub fn budget_at(schedule: &BudgetSchedule, t: u64) -> f64 {
    debug_assert!(t >= 1, "rounds are 1-based");
    let elapsed = t.saturating_sub(1) as f64;
    let remaining = 1.0 - elapsed / schedule.budget_horizon as f64;
    (schedule.delta0 * remaining).max(0.0)
}

/// Violations per completed round; 0 before any round has completed.
pub fn violation_rate(ledger: &ViolationLedger) -> f64 {
    if ledger.rounds_seen == 0 {
        0.0
    } else {
        ledger.violation_count as f64 / ledger.rounds_seen as f64
    }
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax_by<F: FnMut(usize) -> f64>(
    candidates: impl IntoIterator<Item = usize>,
    mut score: F,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for arm in candidates {
        let s = score(arm);
        match best {
            Some((_, b)) if !(s > b) => {}
            _ => best = Some((arm, s)),
        }
    }
    best.map(|(arm, _)| arm)
}

pub(crate) fn argmin_by<F: FnMut(usize) -> f64>(
    candidates: impl IntoIterator<Item = usize>,
    mut score: F,
) -> Option<usize> {
    argmax_by(candidates, |a| -score(a))
}

/// One step of the Budgeted UCB selection rule.
///
/// The empirical rate is taken over completed rounds only, and the feasible
/// set compares cost indices against the issued threshold `C_t`, which is
/// the only constraint value known before acting.
pub fn select_action(
    stats: &[ArmStats],
    t: u64,
    threshold: f64,
    schedule: &BudgetSchedule,
    ledger: &ViolationLedger,
) -> Result<PolicyDecision> {
    if stats.is_empty() {
        return Err(Error::NoArms);
    }
    let arms = 0..stats.len();
    let reward_ucb = |a: usize| ucb_index(&stats[a], t, Signal::Reward);
    let cost_ucb = |a: usize| ucb_index(&stats[a], t, Signal::Cost);

    let decision = if violation_rate(ledger) <= budget_at(schedule, t) {
        PolicyDecision {
            arm: argmax_by(arms, reward_ucb).expect("nonempty"),
            mode: Mode::Explore,
        }
    } else {
        let feasible = arms.clone().filter(|&a| cost_ucb(a) <= threshold);
        match argmax_by(feasible, reward_ucb) {
            Some(arm) => PolicyDecision {
                arm,
                mode: Mode::SafeExplore,
            },
            None => PolicyDecision {
                arm: argmin_by(arms, cost_ucb).expect("nonempty"),
                mode: Mode::MinViolation,
            },
        }
    };
    Ok(decision)
}

/// Applies the feedback of a played arm. Returns whether the round violated
/// the threshold (`cost > threshold`, strictly).
pub fn record_feedback(
    stats: &mut ArmStats,
    ledger: &mut ViolationLedger,
    reward: f64,
    cost: f64,
    threshold: f64,
) -> bool {
    stats.record(reward, cost);
    ledger.record(cost, threshold)
}

/// The common observe → select → feedback interface every policy implements.
///
/// Implementations own their state exclusively; they move between threads
/// but are never shared.
pub trait BanditPolicy: Send {
    fn kind(&self) -> PolicyKind;

    fn num_arms(&self) -> usize;

    /// Chooses an arm for round `t` (1-based) after observing the threshold.
    fn select(&mut self, t: u64, threshold: f64, rng: &mut dyn RngCore) -> Result<Selection>;

    /// Feeds back the reward and cost of the arm played in the current round.
    fn observe(&mut self, arm: usize, reward: f64, cost: f64, threshold: f64);
}

/// Budgeted UCB as a stateful policy.
#[derive(Debug, Clone)]
pub struct BudgetedUcb {
    stats: Vec<ArmStats>,
    schedule: BudgetSchedule,
    ledger: ViolationLedger,
}

impl BudgetedUcb {
    pub fn new(num_arms: usize, schedule: BudgetSchedule) -> Result<Self> {
        if num_arms == 0 {
            return Err(Error::NoArms);
        }
        Ok(BudgetedUcb {
            stats: vec![ArmStats::new(); num_arms],
            schedule,
            ledger: ViolationLedger::new(),
        })
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }

    pub fn ledger(&self) -> &ViolationLedger {
        &self.ledger
    }

    pub fn schedule(&self) -> &BudgetSchedule {
        &self.schedule
    }

    pub fn decide(&self, t: u64, threshold: f64) -> Result<PolicyDecision> {
        select_action(&self.stats, t, threshold, &self.schedule, &self.ledger)
    }

    /// Plain `key = value` dump of the learner state, one line per field.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rounds_seen = {}", self.ledger.rounds_seen);
        let _ = writeln!(out, "violation_count = {}", self.ledger.violation_count);
        for (a, s) in self.stats.iter().enumerate() {
            let _ = writeln!(out, "arm.{a}.play_count = {}", s.play_count);
            let _ = writeln!(out, "arm.{a}.reward_sum = {:?}", s.reward_sum);
            let _ = writeln!(out, "arm.{a}.cost_sum = {:?}", s.cost_sum);
        }
        out
    }
}

impl BanditPolicy for BudgetedUcb {
    fn kind(&self) -> PolicyKind {
        PolicyKind::BudgetedUcb
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn select(&mut self, t: u64, threshold: f64, _rng: &mut dyn RngCore) -> Result<Selection> {
        self.decide(t, threshold).map(Selection::from)
    }

    fn observe(&mut self, arm: usize, reward: f64, cost: f64, threshold: f64) {
        record_feedback(&mut self.stats[arm], &mut self.ledger, reward, cost, threshold);
    }
}
