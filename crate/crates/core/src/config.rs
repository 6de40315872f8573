//! Experiment configuration and its flat `key = value` text form.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are
//! rejected so typos surface as config errors. Floats are written in
//! shortest round-trip form, so `parse(to_kv_string(c)) == c`.

use std::fmt;
use std::str::FromStr;

use crate::baselines::{EpsilonGreedy, ThompsonSampling, Ucb1, VirtualQueuePolicy};
use crate::environment::{ConstraintSchedule, PowerGrid, ScheduleKind, WirelessEnvironment, WirelessLink};
use crate::error::{Error, Result};
use crate::policy::{BanditPolicy, BudgetSchedule, BudgetedUcb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    BudgetedUcb,
    Ucb1,
    Thompson,
    EpsilonGreedy,
    VirtualQueue,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::BudgetedUcb,
        PolicyKind::Ucb1,
        PolicyKind::Thompson,
        PolicyKind::EpsilonGreedy,
        PolicyKind::VirtualQueue,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::BudgetedUcb => "budgeted_ucb",
            PolicyKind::Ucb1 => "ucb1",
            PolicyKind::Thompson => "thompson",
            PolicyKind::EpsilonGreedy => "epsilon_greedy",
            PolicyKind::VirtualQueue => "virtual_queue",
        }
    }

    /// Fixed per-policy stream number; independent of which policies are enabled.
    pub fn stream_id(&self) -> u64 {
        match self {
            PolicyKind::BudgetedUcb => 1,
            PolicyKind::Ucb1 => 2,
            PolicyKind::Thompson => 3,
            PolicyKind::EpsilonGreedy => 4,
            PolicyKind::VirtualQueue => 5,
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub horizon: u64,
    pub num_arms: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub delta0: f64,
    /// `None` means "same as the horizon".
    pub budget_horizon: Option<u64>,
    pub schedule: ScheduleKind,
    pub lambda: f64,
    pub seeds: Vec<u64>,
    pub policies: Vec<PolicyKind>,
    pub bandwidth: f64,
    pub noise_density: f64,
    pub distance: f64,
    pub pathloss_exponent: f64,
    pub epsilon: f64,
    /// Thompson prior scale in learner reward units; `None` uses the largest
    /// achievable learner reward.
    pub sigma0: Option<f64>,
    pub queue_penalty_weight: f64,
    pub reward_noise_std: f64,
    /// Factor applied to rewards before they reach a learner; `None` uses
    /// `1 / bandwidth`, i.e. spectral efficiency in bits/s/Hz. Traces and
    /// metrics always stay in bits/s.
    pub learner_reward_scale: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            horizon: 2000,
            num_arms: 11,
            p_min: 0.1,
            p_max: 1.0,
            delta0: 0.5,
            budget_horizon: None,
            schedule: ScheduleKind::UniformRandom,
            lambda: 1e6,
            seeds: vec![1, 2, 3, 4, 5],
            policies: PolicyKind::ALL.to_vec(),
            bandwidth: 1e6,
            noise_density: 1e-9,
            distance: 10.0,
            pathloss_exponent: 3.0,
            epsilon: 0.1,
            sigma0: None,
            queue_penalty_weight: 1.0,
            reward_noise_std: 0.0,
            learner_reward_scale: None,
        }
    }
}

const AUTO: &str = "auto";

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn auto_or<T: ToString>(value: &Option<T>) -> String {
    value.as_ref().map_or_else(|| AUTO.to_string(), T::to_string)
}

impl ExperimentConfig {
    pub fn budget_horizon_or_default(&self) -> u64 {
        self.budget_horizon.unwrap_or(self.horizon)
    }

    pub fn learner_reward_scale_or_default(&self) -> f64 {
        self.learner_reward_scale.unwrap_or(1.0 / self.bandwidth)
    }

    pub fn link(&self) -> Result<WirelessLink> {
        WirelessLink::new(self.bandwidth, self.noise_density, self.distance, self.pathloss_exponent)
    }

    pub fn grid(&self) -> Result<PowerGrid> {
        PowerGrid::new(self.p_min, self.p_max, self.num_arms)
    }

    pub fn budget_schedule(&self) -> Result<BudgetSchedule> {
        BudgetSchedule::new(self.delta0, self.budget_horizon_or_default())
    }

    pub fn environment(&self) -> Result<WirelessEnvironment> {
        let schedule = ConstraintSchedule::new(self.schedule, self.p_min, self.p_max, self.horizon)?;
        WirelessEnvironment::new(self.link()?, self.grid()?, schedule, self.reward_noise_std)
    }

    pub fn sigma0_or_default(&self) -> Result<f64> {
        match self.sigma0 {
            Some(s) => Ok(s),
            None => Ok(self.link()?.throughput(self.p_max)? * self.learner_reward_scale_or_default()),
        }
    }

    pub fn build_policy(&self, kind: PolicyKind) -> Result<Box<dyn BanditPolicy>> {
        let k = self.num_arms;
        Ok(match kind {
            PolicyKind::BudgetedUcb => Box::new(BudgetedUcb::new(k, self.budget_schedule()?)?),
            PolicyKind::Ucb1 => Box::new(Ucb1::new(k)?),
            PolicyKind::Thompson => Box::new(ThompsonSampling::new(k, self.sigma0_or_default()?)?),
            PolicyKind::EpsilonGreedy => Box::new(EpsilonGreedy::new(k, self.epsilon)?),
            PolicyKind::VirtualQueue => Box::new(VirtualQueuePolicy::new(k, self.queue_penalty_weight)?),
        })
    }

    /// Checks every field, naming the first bad one.
    pub fn validate(&self) -> Result<()> {
        let wrap = |field: &str, e: Error| Error::config(field, e.to_string());
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be positive"));
        }
        if let Some(b) = self.budget_horizon {
            if b == 0 || b > self.horizon {
                return Err(Error::config("budget_horizon", format!("must lie in 1..={}", self.horizon)));
            }
        }
        self.budget_schedule().map_err(|e| wrap("delta0", e))?;
        self.grid().map_err(|e| wrap("num_arms", e))?;
        self.link().map_err(|e| wrap("link", e))?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be nonnegative and finite"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("epsilon", "must lie in [0, 1]"));
        }
        if let Some(s) = self.sigma0 {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("sigma0", "must be positive"));
            }
        }
        if !(self.queue_penalty_weight > 0.0 && self.queue_penalty_weight.is_finite()) {
            return Err(Error::config("queue_penalty_weight", "must be positive"));
        }
        if !(self.reward_noise_std >= 0.0 && self.reward_noise_std.is_finite()) {
            return Err(Error::config("reward_noise_std", "must be nonnegative"));
        }
        if let Some(s) = self.learner_reward_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("learner_reward_scale", "must be positive"));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "need at least one seed"));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::config("seeds", format!("duplicate seed {dup}")));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.policies.iter().find(|p| !seen.insert(**p)) {
            return Err(Error::config("policies", format!("duplicate policy {dup}")));
        }
        self.environment().map_err(|e| wrap("environment", e))?;
        Ok(())
    }

    /// Ordered `(key, value)` pairs of the text form.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("horizon", self.horizon.to_string()),
            ("num_arms", self.num_arms.to_string()),
            ("p_min", self.p_min.to_string()),
            ("p_max", self.p_max.to_string()),
            ("delta0", self.delta0.to_string()),
            ("budget_horizon", auto_or(&self.budget_horizon)),
            ("schedule", self.schedule.to_string()),
            ("lambda", self.lambda.to_string()),
            ("seeds", join(&self.seeds)),
            ("policies", join(&self.policies)),
            ("bandwidth", self.bandwidth.to_string()),
            ("noise_density", self.noise_density.to_string()),
            ("distance", self.distance.to_string()),
            ("pathloss_exponent", self.pathloss_exponent.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("sigma0", auto_or(&self.sigma0)),
            ("queue_penalty_weight", self.queue_penalty_weight.to_string()),
            ("reward_noise_std", self.reward_noise_std.to_string()),
            ("learner_reward_scale", auto_or(&self.learner_reward_scale)),
        ]
    }

    pub fn to_kv_string(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Parses the text form, starting from defaults. Keys listed in
    /// `ignored` are accepted and skipped.
    pub fn parse_with(text: &str, ignored: &[&str]) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", lineno + 1), "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if ignored.contains(&key) {
                continue;
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, &[])
    }

    /// Sets one field from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| Error::config(key, format!("`{v}`: {e}")))
        }
        fn opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>>
        where
            T::Err: fmt::Display,
        {
            if v == AUTO {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
        where
            T::Err: fmt::Display,
        {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| num(key, s))
                .collect()
        }
        match key {
            "horizon" => self.horizon = num(key, value)?,
            "num_arms" => self.num_arms = num(key, value)?,
            "p_min" => self.p_min = num(key, value)?,
            "p_max" => self.p_max = num(key, value)?,
            "delta0" => self.delta0 = num(key, value)?,
            "budget_horizon" => self.budget_horizon = opt(key, value)?,
            "schedule" => self.schedule = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "seeds" => self.seeds = list(key, value)?,
            "policies" => self.policies = list(key, value)?,
            "bandwidth" => self.bandwidth = num(key, value)?,
            "noise_density" => self.noise_density = num(key, value)?,
            "distance" => self.distance = num(key, value)?,
            "pathloss_exponent" => self.pathloss_exponent = num(key, value)?,
            "epsilon" => self.epsilon = num(key, value)?,
            "sigma0" => self.sigma0 = opt(key, value)?,
            "queue_penalty_weight" => self.queue_penalty_weight = num(key, value)?,
            "reward_noise_std" => self.reward_noise_std = num(key, value)?,
            "learner_reward_scale" => self.learner_reward_scale = opt(key, value)?,
            other => return Err(Error::config(other, "unknown key")),
        }
        Ok(())
    }
}
