//! Battery-powered transmitter on a path-loss AWGN link.
//!
//! Each arm is a discrete transmit power. Playing it yields the Shannon rate
//! `B log2(1 + P d^-α / (N0 B))` in bits/s and costs exactly `P` watts; the
//! per-round energy cap comes from a [`ConstraintSchedule`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::policy::Mode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WirelessLink {
    bandwidth: f64,
    noise_density: f64,
    distance: f64,
    pathloss_exponent: f64,
}

impl WirelessLink {
    pub fn new(bandwidth: f64, noise_density: f64, distance: f64, pathloss_exponent: f64) -> Result<Self> {
        for (field, v) in [
            ("bandwidth", bandwidth),
            ("noise_density", noise_density),
            ("distance", distance),
            ("pathloss_exponent", pathloss_exponent),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(field, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(WirelessLink {
            bandwidth,
            noise_density,
            distance,
            pathloss_exponent,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `g = d^-α`.
    pub fn channel_gain(&self) -> f64 {
        self.distance.powf(-self.pathloss_exponent)
    }

    pub fn snr(&self, power: f64) -> f64 {
        power * self.channel_gain() / (self.noise_density * self.bandwidth)
    }

    /// Shannon rate in bits/s for a transmit power in watts.
    pub fn throughput(&self, power: f64) -> Result<f64> {
        if !(power > 0.0) {
            return Err(Error::NonPositivePower(power));
        }
        Ok(self.bandwidth * self.snr(power).ln_1p() / std::f64::consts::LN_2)
    }
}

/// `K` evenly spaced transmit powers between `p_min` and `p_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerGrid {
    p_min: f64,
    p_max: f64,
    num_levels: usize,
}

impl PowerGrid {
    pub fn new(p_min: f64, p_max: f64, num_levels: usize) -> Result<Self> {
        if num_levels < 2 {
            return Err(Error::TooFewLevels(num_levels));
        }
        if !(p_min > 0.0 && p_min < p_max && p_max.is_finite()) {
            return Err(Error::param(
                "power_grid",
                format!("need 0 < p_min < p_max, got {p_min}..{p_max}"),
            ));
        }
        Ok(PowerGrid {
            p_min,
            p_max,
            num_levels,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.num_levels
    }

    pub fn p_min(&self) -> f64 {
        self.p_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn step_size(&self) -> f64 {
        (self.p_max - self.p_min) / (self.num_levels - 1) as f64
    }

    /// Power of arm `a`. Both endpoints are returned exactly.
    pub fn level(&self, arm: usize) -> f64 {
        debug_assert!(arm < self.num_levels);
        if arm + 1 == self.num_levels {
            self.p_max
        } else {
            self.p_min + arm as f64 * self.step_size()
        }
    }

    pub fn levels(&self) -> Vec<f64> {
        (0..self.num_levels).map(|a| self.level(a)).collect()
    }
}

pub fn power_levels(grid: &PowerGrid) -> Vec<f64> {
    grid.levels()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    /// Independent `Uniform[low, high]` draw every round.
    UniformRandom,
    /// Linear ramp from `high` down to `low` at round `ceil(T/2)`, then back up.
    LinearVShape,
}

impl ScheduleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleKind::UniformRandom => "random",
            ScheduleKind::LinearVShape => "linear",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ScheduleKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" | "uniform" => Ok(ScheduleKind::UniformRandom),
            "linear" | "v_shape" => Ok(ScheduleKind::LinearVShape),
            other => Err(format!("unknown schedule `{other}` (expected random|linear)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSchedule {
    kind: ScheduleKind,
    low: f64,
    high: f64,
    horizon: u64,
}

impl ConstraintSchedule {
    pub fn new(kind: ScheduleKind, low: f64, high: f64, horizon: u64) -> Result<Self> {
        if !(low <= high) || !low.is_finite() || !high.is_finite() {
            return Err(Error::param("schedule", format!("bad range {low}..{high}")));
        }
        if horizon == 0 {
            return Err(Error::param("horizon", "must be positive"));
        }
        Ok(ConstraintSchedule {
            kind,
            low,
            high,
            horizon,
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Threshold for round `t`. Only the uniform schedule touches `rng`.
    pub fn threshold_at(&self, t: u64, rng: &mut dyn RngCore) -> Result<f64> {
        if t == 0 || t > self.horizon {
            return Err(Error::RoundOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(match self.kind {
            ScheduleKind::UniformRandom => rng.random_range(self.low..=self.high),
            ScheduleKind::LinearVShape => self.ramp(t),
        })
    }

    fn ramp(&self, t: u64) -> f64 {
        let span = self.high - self.low;
        let turn = self.horizon.div_ceil(2);
        if t == turn {
            return self.low;
        }
        let value = if t < turn {
            self.high - span * (t - 1) as f64 / (turn - 1) as f64
        } else {
            self.low + span * (t - turn) as f64 / (self.horizon - turn) as f64
        };
        value.clamp(self.low, self.high)
    }
}

/// One logged round of the interaction protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub t: u64,
    pub threshold: f64,
    pub arm: usize,
    pub reward: f64,
    pub cost: f64,
    pub violated: bool,
    pub mode: Option<Mode>,
    pub budget: f64,
    pub empirical_rate: f64,
}

/// Link, power grid and threshold schedule bundled together.
///
/// Feedback is deterministic given the arm unless `reward_noise_std > 0`,
/// in which case zero-mean Gaussian noise is added to the reward.
#[derive(Debug, Clone)]
pub struct WirelessEnvironment {
    link: WirelessLink,
    grid: PowerGrid,
    schedule: ConstraintSchedule,
    reward_noise: Option<Normal<f64>>,
    mean_rewards: Vec<f64>,
}

impl WirelessEnvironment {
    pub fn new(
        link: WirelessLink,
        grid: PowerGrid,
        schedule: ConstraintSchedule,
        reward_noise_std: f64,
    ) -> Result<Self> {
        let reward_noise = if reward_noise_std > 0.0 {
            Some(Normal::new(0.0, reward_noise_std).map_err(|e| Error::param("reward_noise_std", e.to_string()))?)
        } else if reward_noise_std == 0.0 {
            None
        } else {
            return Err(Error::param("reward_noise_std", "must be nonnegative"));
        };
        let mean_rewards = grid
            .levels()
            .into_iter()
            .map(|p| link.throughput(p))
            .collect::<Result<Vec<_>>>()?;
        // The clairvoyant oracle relies on reward and cost both rising with the arm index.
        let monotone = mean_rewards.windows(2).all(|w| w[0] < w[1])
            && grid.levels().windows(2).all(|w| w[0] < w[1]);
        if !monotone {
            return Err(Error::param(
                "environment",
                "throughput is not strictly increasing over the power grid",
            ));
        }
        Ok(WirelessEnvironment {
            link,
            grid,
            schedule,
            reward_noise,
            mean_rewards,
        })
    }

    pub fn link(&self) -> &WirelessLink {
        &self.link
    }

    pub fn grid(&self) -> &PowerGrid {
        &self.grid
    }

    pub fn schedule(&self) -> &ConstraintSchedule {
        &self.schedule
    }

    pub fn num_arms(&self) -> usize {
        self.grid.num_levels()
    }

    pub fn mean_reward(&self, arm: usize) -> f64 {
        self.mean_rewards[arm]
    }

    pub fn threshold_at(&self, t: u64, rng: &mut dyn RngCore) -> Result<f64> {
        self.schedule.threshold_at(t, rng)
    }

    /// Full threshold sequence for rounds `1..=horizon`.
    pub fn thresholds(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        (1..=self.schedule.horizon)
            .map(|t| self.schedule.threshold_at(t, rng))
            .collect()
    }

    /// Plays `arm`, returning `(reward in bits/s, cost in W)`.
    pub fn step(&self, arm: usize, rng: &mut dyn RngCore) -> Result<(f64, f64)> {
        if arm >= self.num_arms() {
            return Err(Error::ArmOutOfRange {
                arm,
                num_arms: self.num_arms(),
            });
        }
        let mut reward = self.mean_rewards[arm];
        if let Some(noise) = &self.reward_noise {
            reward += noise.sample(rng);
        }
        Ok((reward, self.grid.level(arm)))
    }
}
