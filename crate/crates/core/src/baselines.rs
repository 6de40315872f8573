//! Comparison policies: unconstrained UCB1, Gaussian Thompson sampling,
//! epsilon-greedy and a virtual-queue (drift-plus-penalty) policy.
//!
//! None of them looks at the constraint when choosing, apart from the
//! virtual queue, which turns past excess cost into a penalty on costly arms.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use crate::config::PolicyKind;
use crate::error::{Error, Result};
use crate::policy::{argmax_by, ucb_index, ArmStats, BanditPolicy, Selection, Signal};

/// Argmax of the reward index, unplayed arms first.
pub fn ucb1_select(stats: &[ArmStats], t: u64) -> Result<usize> {
    argmax_by(0..stats.len(), |a| ucb_index(&stats[a], t, Signal::Reward)).ok_or(Error::NoArms)
}

/// Per-arm Gaussian sampling distribution used by Thompson sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPosterior {
    observation_count: u64,
    mean_estimate: f64,
    sampling_scale: f64,
}

impl ArmPosterior {
    pub fn new(observation_count: u64, mean_estimate: f64, sampling_scale: f64) -> Result<Self> {
        if !(sampling_scale > 0.0 && sampling_scale.is_finite()) {
            return Err(Error::param("sampling_scale", format!("must be positive, got {sampling_scale}")));
        }
        if !mean_estimate.is_finite() {
            return Err(Error::param("mean_estimate", "must be finite"));
        }
        Ok(ArmPosterior {
            observation_count,
            mean_estimate,
            sampling_scale,
        })
    }

    /// `Normal(mean, σ0/√N)`, or `Normal(0, σ0)` for an unplayed arm.
    pub fn from_stats(stats: &ArmStats, sigma0: f64) -> Result<Self> {
        let n = stats.play_count();
        let mean = stats.mean(Signal::Reward).unwrap_or(0.0);
        ArmPosterior::new(n, mean, sigma0 / (n.max(1) as f64).sqrt())
    }

    pub fn observation_count(&self) -> u64 {
        self.observation_count
    }

    pub fn mean_estimate(&self) -> f64 {
        self.mean_estimate
    }

    pub fn sampling_scale(&self) -> f64 {
        self.sampling_scale
    }
}

/// Draws one sample per arm and returns the argmax. Consumes exactly one
/// normal draw per arm, in arm order.
pub fn thompson_select(posteriors: &[ArmPosterior], rng: &mut dyn RngCore) -> Result<usize> {
    let samples = posteriors
        .iter()
        .map(|p| {
            Normal::new(p.mean_estimate, p.sampling_scale)
                .map(|d| d.sample(rng))
                .map_err(|e| Error::param("sampling_scale", e.to_string()))
        })
        .collect::<Result<Vec<f64>>>()?;
    argmax_by(0..samples.len(), |a| samples[a]).ok_or(Error::NoArms)
}

/// Uniform arm with probability `epsilon`, otherwise the best empirical mean
/// (unplayed arms count as 0). One uniform draw decides the branch; the
/// explore branch takes a second draw for the arm.
pub fn epsilon_greedy_select(stats: &[ArmStats], epsilon: f64, rng: &mut dyn RngCore) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if stats.is_empty() {
        return Err(Error::NoArms);
    }
    if rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..stats.len()));
    }
    Ok(argmax_by(0..stats.len(), |a| stats[a].mean(Signal::Reward).unwrap_or(0.0)).expect("nonempty"))
}

/// Backlog of accumulated constraint excess.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtualQueue {
    backlog: f64,
    penalty_weight: f64,
}

impl VirtualQueue {
    pub fn new(penalty_weight: f64) -> Result<Self> {
        if !(penalty_weight > 0.0 && penalty_weight.is_finite()) {
            return Err(Error::param(
                "queue_penalty_weight",
                format!("must be positive, got {penalty_weight}"),
            ));
        }
        Ok(VirtualQueue {
            backlog: 0.0,
            penalty_weight,
        })
    }

    pub fn with_backlog(penalty_weight: f64, backlog: f64) -> Result<Self> {
        if !(backlog >= 0.0) {
            return Err(Error::param("backlog", "must be nonnegative"));
        }
        Ok(VirtualQueue {
            backlog,
            ..VirtualQueue::new(penalty_weight)?
        })
    }

    pub fn backlog(&self) -> f64 {
        self.backlog
    }

    pub fn penalty_weight(&self) -> f64 {
        self.penalty_weight
    }

    /// `Q ← max(0, Q + c_t − C_t)`.
    pub fn update(&mut self, cost: f64, threshold: f64) {
        self.backlog = (self.backlog + cost - threshold).max(0.0);
    }
}

pub fn virtual_queue_update(queue: &mut VirtualQueue, cost: f64, threshold: f64) {
    queue.update(cost, threshold);
}

/// Argmax of `UCB_r(a) − (Q/V)·mean_cost(a)`, unplayed arms first.
///
/// The threshold is part of the signature for symmetry with the other
/// policies; it only enters through the backlog.
pub fn virtual_queue_select(stats: &[ArmStats], queue: &VirtualQueue, _threshold: f64, t: u64) -> Result<usize> {
    if stats.is_empty() {
        return Err(Error::NoArms);
    }
    if let Some(unplayed) = stats.iter().position(|s| s.play_count() == 0) {
        return Ok(unplayed);
    }
    let pressure = queue.backlog / queue.penalty_weight;
    let score = |a: usize| {
        let penalty = if pressure == 0.0 {
            0.0
        } else {
            pressure * stats[a].mean(Signal::Cost).expect("played")
        };
        ucb_index(&stats[a], t, Signal::Reward) - penalty
    };
    Ok(argmax_by(0..stats.len(), score).expect("nonempty"))
}

fn check_arms(num_arms: usize) -> Result<Vec<ArmStats>> {
    if num_arms == 0 {
        return Err(Error::NoArms);
    }
    Ok(vec![ArmStats::new(); num_arms])
}

#[derive(Debug, Clone)]
pub struct Ucb1 {
    stats: Vec<ArmStats>,
}

impl Ucb1 {
    pub fn new(num_arms: usize) -> Result<Self> {
        Ok(Ucb1 {
            stats: check_arms(num_arms)?,
        })
    }

    pub fn stats(&self) -> &[ArmStats] {
        &self.stats
    }
}

impl BanditPolicy for Ucb1 {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Ucb1
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn select(&mut self, t: u64, _threshold: f64, _rng: &mut dyn RngCore) -> Result<Selection> {
        Ok(Selection {
            arm: ucb1_select(&self.stats, t)?,
            mode: None,
        })
    }

    fn observe(&mut self, arm: usize, reward: f64, cost: f64, _threshold: f64) {
        self.stats[arm].record(reward, cost);
    }
}

#[derive(Debug, Clone)]
pub struct ThompsonSampling {
    stats: Vec<ArmStats>,
    sigma0: f64,
}

impl ThompsonSampling {
    pub fn new(num_arms: usize, sigma0: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::param("sigma0", format!("must be positive, got {sigma0}")));
        }
        Ok(ThompsonSampling {
            stats: check_arms(num_arms)?,
            sigma0,
        })
    }

    pub fn posteriors(&self) -> Result<Vec<ArmPosterior>> {
        self.stats
            .iter()
            .map(|s| ArmPosterior::from_stats(s, self.sigma0))
            .collect()
    }
}

impl BanditPolicy for ThompsonSampling {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Thompson
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn select(&mut self, _t: u64, _threshold: f64, rng: &mut dyn RngCore) -> Result<Selection> {
        Ok(Selection {
            arm: thompson_select(&self.posteriors()?, rng)?,
            mode: None,
        })
    }

    fn observe(&mut self, arm: usize, reward: f64, cost: f64, _threshold: f64) {
        self.stats[arm].record(reward, cost);
    }
}

#[derive(Debug, Clone)]
pub struct EpsilonGreedy {
    stats: Vec<ArmStats>,
    epsilon: f64,
}

impl EpsilonGreedy {
    pub fn new(num_arms: usize, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(EpsilonGreedy {
            stats: check_arms(num_arms)?,
            epsilon,
        })
    }
}

impl BanditPolicy for EpsilonGreedy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::EpsilonGreedy
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn select(&mut self, _t: u64, _threshold: f64, rng: &mut dyn RngCore) -> Result<Selection> {
        Ok(Selection {
            arm: epsilon_greedy_select(&self.stats, self.epsilon, rng)?,
            mode: None,
        })
    }

    fn observe(&mut self, arm: usize, reward: f64, cost: f64, _threshold: f64) {
        self.stats[arm].record(reward, cost);
    }
}

#[derive(Debug, Clone)]
pub struct VirtualQueuePolicy {
    stats: Vec<ArmStats>,
    queue: VirtualQueue,
}

impl VirtualQueuePolicy {
    pub fn new(num_arms: usize, penalty_weight: f64) -> Result<Self> {
        Ok(VirtualQueuePolicy {
            stats: check_arms(num_arms)?,
            queue: VirtualQueue::new(penalty_weight)?,
        })
    }

    pub fn queue(&self) -> &VirtualQueue {
        &self.queue
    }
}

impl BanditPolicy for VirtualQueuePolicy {
    fn kind(&self) -> PolicyKind {
        PolicyKind::VirtualQueue
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn select(&mut self, t: u64, threshold: f64, _rng: &mut dyn RngCore) -> Result<Selection> {
        Ok(Selection {
            arm: virtual_queue_select(&self.stats, &self.queue, threshold, t)?,
            mode: None,
        })
    }

    fn observe(&mut self, arm: usize, reward: f64, cost: f64, threshold: f64) {
        self.stats[arm].record(reward, cost);
        self.queue.update(cost, threshold);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{select_action, BudgetSchedule, Mode, ViolationLedger};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stats(n: u64, r: f64, c: f64) -> ArmStats {
        ArmStats::from_totals(n, r, c).unwrap()
    }

    #[test]
    fn ucb1_points() {
        assert_eq!(ucb1_select(&[ArmStats::new(); 4], 1).unwrap(), 0);
        assert_eq!(ucb1_select(&[stats(3, 6.0, 0.0), stats(3, 9.0, 0.0)], 10).unwrap(), 1);
        // 1 + sqrt(2 ln 100) ≈ 4.035 beats 3 + sqrt(2 ln 100 / 100) ≈ 3.303
        assert_eq!(ucb1_select(&[stats(100, 300.0, 0.0), stats(1, 1.0, 0.0)], 100).unwrap(), 1);
        assert!(matches!(ucb1_select(&[], 1), Err(Error::NoArms)));
    }

    #[test]
    fn thompson_single_arm_and_degenerate_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let one = [ArmPosterior::new(0, 0.0, 1.0).unwrap()];
        assert_eq!(thompson_select(&one, &mut rng).unwrap(), 0);

        let sharp = [
            ArmPosterior::new(10, 2.0, 1e-9).unwrap(),
            ArmPosterior::new(10, 5.0, 1e-9).unwrap(),
        ];
        assert!((0..1000).all(|_| thompson_select(&sharp, &mut rng).unwrap() == 1));
        assert!(thompson_select(&[], &mut rng).is_err());
        assert!(ArmPosterior::new(1, 0.0, 0.0).is_err());
    }

    #[test]
    fn thompson_symmetric_posteriors_split_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = ArmPosterior::new(4, 1.0, 0.5).unwrap();
        let wins = (0..10_000)
            .filter(|_| thompson_select(&[p, p], &mut rng).unwrap() == 0)
            .count();
        let share = wins as f64 / 10_000.0;
        assert!((share - 0.5).abs() < 0.02, "share {share}");
    }

    #[test]
    fn posterior_scale_shrinks_with_observations() {
        let a = ArmPosterior::from_stats(&stats(1, 2.0, 0.0), 1.0).unwrap();
        let b = ArmPosterior::from_stats(&stats(16, 32.0, 0.0), 1.0).unwrap();
        let fresh = ArmPosterior::from_stats(&ArmStats::new(), 1.0).unwrap();
        assert_eq!(a.sampling_scale(), 1.0);
        assert_eq!(b.sampling_scale(), 0.25);
        assert_eq!(b.mean_estimate(), 2.0);
        assert_eq!((fresh.mean_estimate(), fresh.sampling_scale()), (0.0, 1.0));
    }

    #[test]
    fn epsilon_zero_always_exploits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let arms = [stats(2, 2.0, 0.0), stats(2, 8.0, 0.0), ArmStats::new()];
        assert!((0..1000).all(|_| epsilon_greedy_select(&arms, 0.0, &mut rng).unwrap() == 1));
    }

    #[test]
    fn epsilon_one_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let arms = [ArmStats::new(); 11];
        let mut counts = [0usize; 11];
        for _ in 0..100_000 {
            counts[epsilon_greedy_select(&arms, 1.0, &mut rng).unwrap()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 1e5 - 1.0 / 11.0).abs() < 0.01, "{counts:?}");
        }
    }

    #[test]
    fn epsilon_mixture_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let arms = [stats(1, 3.0, 0.0), stats(1, 2.0, 0.0)];
        let hits = (0..100_000)
            .filter(|_| epsilon_greedy_select(&arms, 0.1, &mut rng).unwrap() == 0)
            .count();
        let p = hits as f64 / 1e5;
        assert!((p - 0.95).abs() < 0.005, "p {p}");
    }

    #[test]
    fn epsilon_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(matches!(
            epsilon_greedy_select(&[ArmStats::new()], 1.5, &mut rng),
            Err(Error::InvalidEpsilon(_))
        ));
        assert!(epsilon_greedy_select(&[], 0.1, &mut rng).is_err());
    }

    #[test]
    fn virtual_queue_points() {
        let arms = [stats(3, 6.0, 0.6), stats(3, 9.0, 2.7)];
        let idle = VirtualQueue::new(1.0).unwrap();
        assert_eq!(
            virtual_queue_select(&arms, &idle, 0.5, 10).unwrap(),
            ucb1_select(&arms, 10).unwrap()
        );

        let heavy = VirtualQueue::with_backlog(1.0, 1e15).unwrap();
        let costs = [stats(1, 9.0, 0.9), stats(1, 5.0, 0.3), stats(1, 7.0, 0.6)];
        assert_eq!(virtual_queue_select(&costs, &heavy, 0.5, 5).unwrap(), 1);

        // t = 1 makes the bonus vanish: indices 3.0 − 0.3 = 2.7 vs 5.0 − 2.7 = 2.3.
        let pair = [stats(1, 3.0, 0.1), stats(1, 5.0, 0.9)];
        let q = VirtualQueue::with_backlog(1.0, 3.0).unwrap();
        assert_eq!(virtual_queue_select(&pair, &q, 0.5, 1).unwrap(), 0);

        let partly = [stats(1, 3.0, 0.1), ArmStats::new()];
        assert_eq!(virtual_queue_select(&partly, &q, 0.5, 2).unwrap(), 1);
        assert!(virtual_queue_select(&[], &q, 0.5, 1).is_err());
    }

    #[test]
    fn virtual_queue_recursion() {
        let mut q = VirtualQueue::new(1.0).unwrap();
        virtual_queue_update(&mut q, 0.3, 0.5);
        assert_eq!(q.backlog(), 0.0);
        let mut q = VirtualQueue::with_backlog(1.0, 1.0).unwrap();
        virtual_queue_update(&mut q, 0.9, 0.5);
        assert!((q.backlog() - 1.4).abs() < 1e-15);
        virtual_queue_update(&mut q, 0.7, 0.7);
        assert!((q.backlog() - 1.4).abs() < 1e-15);
        assert!(VirtualQueue::new(0.0).is_err());
    }

    fn arb_stats() -> impl Strategy<Value = Vec<ArmStats>> {
        prop::collection::vec((0u64..6, 0.0f64..10.0, 0.0f64..2.0), 1..6).prop_map(|v| {
            v.into_iter()
                .map(|(n, m, c)| {
                    if n == 0 {
                        ArmStats::new()
                    } else {
                        stats(n, m * n as f64, c * n as f64)
                    }
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn ucb1_matches_budgeted_explore_branch(arms in arb_stats(), t in 1u64..200) {
            let sched = BudgetSchedule::new(0.5, 1000).unwrap();
            let d = select_action(&arms, t, 0.5, &sched, &ViolationLedger::new()).unwrap();
            prop_assert_eq!(d.mode, Mode::Explore);
            prop_assert_eq!(d.arm, ucb1_select(&arms, t).unwrap());
        }

        #[test]
        fn backlog_never_negative(stream in prop::collection::vec((0.0f64..2.0, 0.0f64..2.0), 0..200)) {
            let mut q = VirtualQueue::new(1.0).unwrap();
            for (c, th) in stream {
                q.update(c, th);
                prop_assert!(q.backlog() >= 0.0);
            }
        }

        #[test]
        fn seeded_policies_reproduce(seed in any::<u64>(), arms in arb_stats()) {
            let run = |seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let post: Vec<_> = arms.iter().map(|s| ArmPosterior::from_stats(s, 1.0).unwrap()).collect();
                (0..20)
                    .map(|_| {
                        (
                            thompson_select(&post, &mut rng).unwrap(),
                            epsilon_greedy_select(&arms, 0.3, &mut rng).unwrap(),
                        )
                    })
                    .collect::<Vec<_>>()
            };
            prop_assert_eq!(run(seed), run(seed));
        }
    }
}
