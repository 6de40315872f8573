//! Evaluation curves: cumulative violations, the penalised objective
//! `Σ r − Λ Σ 1{c > C}`, and the absolute cumulative throughput regret
//! against the clairvoyant constrained optimum.

use crate::environment::{PowerGrid, RoundRecord, WirelessLink};
use crate::error::{Error, Result};
use crate::policy::{argmax_by, argmin_by};

/// Best arm per round with full knowledge of the mean rewards.
#[derive(Debug, Clone, PartialEq)]
pub struct ClairvoyantOptimum {
    pub optimal_arm: Vec<usize>,
    pub optimal_reward: Vec<f64>,
}

impl ClairvoyantOptimum {
    pub fn len(&self) -> usize {
        self.optimal_arm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.optimal_arm.is_empty()
    }
}

/// Scans every arm each round: the highest-throughput arm whose power fits
/// under `C_t`, or the cheapest arm when none fits.
pub fn clairvoyant(grid: &PowerGrid, link: &WirelessLink, thresholds: &[f64]) -> Result<ClairvoyantOptimum> {
    let levels = grid.levels();
    let rewards = levels
        .iter()
        .map(|&p| link.throughput(p))
        .collect::<Result<Vec<_>>>()?;
    let mut optimal_arm = Vec::with_capacity(thresholds.len());
    let mut optimal_reward = Vec::with_capacity(thresholds.len());
    for &c in thresholds {
        let feasible = (0..levels.len()).filter(|&a| levels[a] <= c);
        let arm = argmax_by(feasible, |a| rewards[a])
            .or_else(|| argmin_by(0..levels.len(), |a| levels[a]))
            .expect("grid has at least two levels");
        optimal_arm.push(arm);
        optimal_reward.push(rewards[arm]);
    }
    Ok(ClairvoyantOptimum {
        optimal_arm,
        optimal_reward,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurves {
    pub cumulative_violations: Vec<u64>,
    pub overall_objective: Vec<f64>,
    pub absolute_regret: Vec<f64>,
    /// `V(T)/T`, counting the final round.
    pub final_violation_rate: f64,
}

impl MetricCurves {
    pub fn len(&self) -> usize {
        self.cumulative_violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative_violations.is_empty()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.overall_objective.last().copied()
    }

    pub fn final_violations(&self) -> Option<u64> {
        self.cumulative_violations.last().copied()
    }
}

pub fn compute_curves(trace: &[RoundRecord], oracle: &ClairvoyantOptimum, lambda: f64) -> Result<MetricCurves> {
    if trace.len() != oracle.len() {
        return Err(Error::LengthMismatch {
            left: trace.len(),
            right: oracle.len(),
        });
    }
    let n = trace.len();
    let mut cumulative_violations = Vec::with_capacity(n);
    let mut overall_objective = Vec::with_capacity(n);
    let mut absolute_regret = Vec::with_capacity(n);
    let (mut violations, mut reward_total, mut gap_total) = (0u64, 0.0f64, 0.0f64);
    for (rec, &best) in trace.iter().zip(&oracle.optimal_reward) {
        violations += u64::from(rec.cost > rec.threshold);
        reward_total += rec.reward;
        gap_total += best - rec.reward;
        cumulative_violations.push(violations);
        overall_objective.push(reward_total - lambda * violations as f64);
        absolute_regret.push(gap_total.abs());
    }
    Ok(MetricCurves {
        cumulative_violations,
        overall_objective,
        absolute_regret,
        final_violation_rate: if n == 0 { 0.0 } else { violations as f64 / n as f64 },
    })
}

/// Pointwise mean and sample standard deviation of one series across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl SeriesStats {
    fn from_runs(runs: &[Vec<f64>]) -> Self {
        let k = runs.len() as f64;
        let len = runs[0].len();
        let mut mean = Vec::with_capacity(len);
        let mut std = Vec::with_capacity(len);
        for i in 0..len {
            let m = runs.iter().map(|r| r[i]).sum::<f64>() / k;
            let var = if runs.len() < 2 {
                0.0
            } else {
                runs.iter().map(|r| (r[i] - m).powi(2)).sum::<f64>() / (k - 1.0)
            };
            mean.push(m);
            std.push(var.sqrt());
        }
        SeriesStats { mean, std }
    }

    pub fn last_mean(&self) -> Option<f64> {
        self.mean.last().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurves {
    pub runs: usize,
    pub cumulative_violations: SeriesStats,
    pub overall_objective: SeriesStats,
    pub absolute_regret: SeriesStats,
    pub final_violation_rate: f64,
}

pub fn aggregate(runs: &[MetricCurves]) -> Result<AggregateCurves> {
    let first = runs.first().ok_or(Error::EmptyRuns)?;
    if let Some(bad) = runs.iter().find(|r| r.len() != first.len()) {
        return Err(Error::LengthMismatch {
            left: first.len(),
            right: bad.len(),
        });
    }
    let violations: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| r.cumulative_violations.iter().map(|&v| v as f64).collect())
        .collect();
    let objective: Vec<Vec<f64>> = runs.iter().map(|r| r.overall_objective.clone()).collect();
    let regret: Vec<Vec<f64>> = runs.iter().map(|r| r.absolute_regret.clone()).collect();
    Ok(AggregateCurves {
        runs: runs.len(),
        cumulative_violations: SeriesStats::from_runs(&violations),
        overall_objective: SeriesStats::from_runs(&objective),
        absolute_regret: SeriesStats::from_runs(&regret),
        final_violation_rate: runs.iter().map(|r| r.final_violation_rate).sum::<f64>() / runs.len() as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthModel {
    Linear,
    Logarithmic,
}

/// Outcome of [`log_growth_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    /// First round of the fitted region (`T_bud + 1`).
    pub region_start: u64,
    /// Residual sum of squares of `V ≈ a + b t`, when the region was fittable.
    pub linear_rss: Option<f64>,
    /// Residual sum of squares of `V ≈ a + b ln t`.
    pub log_rss: Option<f64>,
    pub better_fit: Option<GrowthModel>,
    /// `V(T) − V(T/2) < V(T/2)`.
    pub sublinear: bool,
}

/// Fewest post-budget rounds worth fitting.
pub const MIN_FIT_POINTS: usize = 10;

/// Compares a linear and a logarithmic least-squares fit of the cumulative
/// violations on rounds `t > T_bud`. When that region is too short the
/// report only carries the half-horizon sublinearity test.
pub fn log_growth_check(series: &[f64], budget_horizon: u64) -> Result<GrowthReport> {
    if series.len() < 100 {
        return Err(Error::param("series", format!("need at least 100 rounds, got {}", series.len())));
    }
    let horizon = series.len();
    let half = series[horizon / 2 - 1];
    let sublinear = series[horizon - 1] - half < half;

    let start = budget_horizon as usize + 1;
    let region: Vec<(f64, f64)> = (start.max(1)..=horizon).map(|t| (t as f64, series[t - 1])).collect();
    let (linear_rss, log_rss, better_fit) = if region.len() >= MIN_FIT_POINTS {
        let lin = least_squares_rss(region.iter().copied());
        let log = least_squares_rss(region.iter().map(|&(t, v)| (t.ln(), v)));
        let better = if log < lin {
            GrowthModel::Logarithmic
        } else {
            GrowthModel::Linear
        };
        (Some(lin), Some(log), Some(better))
    } else {
        (None, None, None)
    };
    Ok(GrowthReport {
        region_start: start as u64,
        linear_rss,
        log_rss,
        better_fit,
        sublinear,
    })
}

/// RSS of the ordinary least-squares line through `(x, y)`.
fn least_squares_rss(points: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxx, sxy) = points
        .clone()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx).powi(2), b + (x - mx) * (y - my)));
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    points.map(|(x, y)| (y - intercept - slope * x).powi(2)).sum()
}
