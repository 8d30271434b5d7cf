//! Allocation policies behind a common interface.
//!
//! * [`SuccessiveElimination`]: splits the resource evenly over an active set and
//!   drops arms whose upper confidence bound falls below the best lower bound.
//! * [`EpsGreedy`]: gives every non-leading arm `K^{-1} t^{-α}` and the rest to
//!   the arm with the highest mean-of-ratios estimate.
//! * [`UcbBinary`] and [`Uniform`]: baselines.
//!
//! Each policy keeps its own [`ArmStatistics`], computed with the noise order
//! it was configured with (which may differ from the environment's).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::{AllocationVector, BanditInstance};
use crate::error::{Error, Result};
use crate::estimators::{AllocPowers, ArmStatistics};
use crate::scalar::{argmax_lowest, Scalar};

/// Confidence intervals evaluated by a policy in the last round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundConfidence<F> {
    pub round: u64,
    /// Arms whose intervals were evaluated, i.e. the active set before elimination.
    pub arms: Vec<usize>,
    pub estimates: Vec<F>,
    pub width: F,
}

impl<F: Scalar> RoundConfidence<F> {
    pub fn lower(&self, k: usize) -> F {
        self.estimates[k] - self.width
    }

    pub fn upper(&self, k: usize) -> F {
        self.estimates[k] + self.width
    }
}

pub trait Policy<F: Scalar>: Send {
    fn name(&self) -> &'static str;

    fn num_arms(&self) -> usize;

    /// Allocation for round `t` (1-based). Pure function of the policy state.
    fn decide(&self, t: u64) -> AllocationVector<F>;

    /// Feeds back the full reward vector of round `t`.
    fn observe(&mut self, t: u64, alloc: &AllocationVector<F>, rewards: &[F]);

    /// Per-round status column: active-set size for elimination, current
    /// leader for greedy, last pulled arm for UCB, `K` for uniform.
    fn status(&self) -> usize;

    fn statistics(&self) -> &[ArmStatistics<F>];

    fn confidence(&self) -> Option<&RoundConfidence<F>> {
        None
    }
}

fn observe_all<F: Scalar>(stats: &mut [ArmStatistics<F>], alloc: &AllocationVector<F>, rewards: &[F], b: F) {
    let mut cached: Option<AllocPowers<F>> = None;
    for (i, s) in stats.iter_mut().enumerate() {
        let a = alloc.get(i);
        let p = match cached {
            Some(p) if p.a == a => p,
            _ => {
                let p = AllocPowers::new(a, b);
                cached = Some(p);
                p
            }
        };
        s.update_with(&p, rewards[i]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "se")]
    SuccessiveElimination,
    #[serde(rename = "eps-greedy")]
    EpsGreedy,
    #[serde(rename = "ucb-binary")]
    UcbBinary,
    #[serde(rename = "uniform")]
    Uniform,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::SuccessiveElimination => "se",
            PolicyKind::EpsGreedy => "eps-greedy",
            PolicyKind::UcbBinary => "ucb-binary",
            PolicyKind::Uniform => "uniform",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "se" => Ok(PolicyKind::SuccessiveElimination),
            "eps-greedy" => Ok(PolicyKind::EpsGreedy),
            "ucb-binary" => Ok(PolicyKind::UcbBinary),
            "uniform" => Ok(PolicyKind::Uniform),
            other => Err(Error::Config(format!("unknown policy `{other}`"))),
        }
    }
}

/// Policy section of a run config. `sigma` and `b` default to the instance's
/// values; overriding `b` runs the policy with a misspecified noise order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub name: PolicyKind,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
}

impl PolicySpec {
    pub fn new(name: PolicyKind) -> Self {
        Self { name, eps: None, sigma: None, b: None }
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    /// Instantiates the policy for `instance` over `horizon` rounds.
    pub fn build<F: Scalar>(&self, instance: &BanditInstance<F>, horizon: u64) -> Result<Box<dyn Policy<F>>> {
        let k = instance.num_arms();
        let sigma = self.sigma.map(F::lit).unwrap_or(instance.sigma());
        let b = self.b.map(F::lit).unwrap_or(instance.b());
        Ok(match self.name {
            PolicyKind::SuccessiveElimination => Box::new(SuccessiveElimination::new(k, horizon, b, sigma)?),
            PolicyKind::EpsGreedy => {
                let eps = self.eps.ok_or_else(|| Error::Config("eps-greedy needs policy.eps".into()))?;
                Box::new(EpsGreedy::new(k, b, F::lit(eps)).map_err(|e| Error::Incompatible(e.to_string()))?)
            }
            PolicyKind::UcbBinary => Box::new(UcbBinary::new(k, sigma)?),
            PolicyKind::Uniform => Box::new(Uniform::new(k)),
        })
    }
}

/// Successive elimination over an evenly split resource.
///
/// The interval half-width after round `t` is `2√3·σ·√(ln t · ln T) / √r1`;
/// because every active arm has received the same allocation sequence, all
/// active arms share it. Eliminations start at `t = 2` (the width is zero
/// at `t = 1`).
#[derive(Debug, Clone)]
pub struct SuccessiveElimination<F> {
    active: Vec<usize>,
    eliminated_at: Vec<Option<u64>>,
    horizon: u64,
    b: F,
    sigma: F,
    stats: Vec<ArmStatistics<F>>,
    last: Option<RoundConfidence<F>>,
    fallbacks: u32,
}

impl<F: Scalar> SuccessiveElimination<F> {
    pub fn new(k: usize, horizon: u64, b: F, sigma: F) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidPolicy("need at least one arm".into()));
        }
        if horizon < 1 {
            return Err(Error::InvalidPolicy("horizon must be >= 1".into()));
        }
        if !(b >= F::lit(0.5) && b <= F::one()) {
            return Err(Error::InvalidPolicy(format!("successive elimination takes b in [1/2, 1], got {b}")));
        }
        if !(sigma > F::zero()) {
            return Err(Error::InvalidPolicy(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            active: (0..k).collect(),
            eliminated_at: vec![None; k],
            horizon,
            b,
            sigma,
            stats: vec![ArmStatistics::new(); k],
            last: None,
            fallbacks: 0,
        })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    /// Round in which each arm was eliminated (`None` while active).
    pub fn eliminated_at(&self) -> &[Option<u64>] {
        &self.eliminated_at
    }

    /// Last round each arm was active: its elimination round, or `T` for survivors.
    pub fn stopping_times(&self) -> Vec<u64> {
        self.eliminated_at.iter().map(|e| e.unwrap_or(self.horizon)).collect()
    }

    /// Number of times the retain-best safeguard fired.
    pub fn fallbacks(&self) -> u32 {
        self.fallbacks
    }

    /// Half-width of the interval after round `t` given precision `r1`.
    pub fn ci_width(&self, t: u64, r1: F) -> F {
        let t = F::from_count(t as usize);
        let horizon = F::from_count(self.horizon as usize);
        F::lit(2.0 * 3f64.sqrt()) * self.sigma * (t.ln() * horizon.ln()).sqrt() / r1.sqrt()
    }

    fn eliminate(&mut self, t: u64) {
        let k = self.stats.len();
        let mut estimates = vec![F::nan(); k];
        let mut width: Option<F> = None;
        for &i in &self.active {
            let s = &self.stats[i];
            let (Ok(mu), Ok(r1)) = (s.mu_hat_1(), s.r1()) else {
                return;
            };
            estimates[i] = mu;
            let w = self.ci_width(t, r1);
            match width {
                None => width = Some(w),
                Some(prev) => debug_assert_eq!(prev, w, "active arms must share one interval width"),
            }
        }
        let Some(width) = width else { return };
        let best_lcb = self.active.iter().map(|&i| estimates[i] - width).fold(F::neg_infinity(), F::max);
        let checked = self.active.clone();
        let survivors: Vec<usize> =
            self.active.iter().copied().filter(|&i| !(estimates[i] + width < best_lcb)).collect();
        let survivors = if survivors.is_empty() {
            self.fallbacks += 1;
            let keep = checked[argmax_lowest(checked.iter().map(|&i| estimates[i])).expect("non-empty")];
            vec![keep]
        } else {
            survivors
        };
        for &i in &checked {
            if !survivors.contains(&i) {
                self.eliminated_at[i] = Some(t);
            }
        }
        self.active = survivors;
        self.last = Some(RoundConfidence { round: t, arms: checked, estimates, width });
    }
}

impl<F: Scalar> Policy<F> for SuccessiveElimination<F> {
    fn name(&self) -> &'static str {
        "se"
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn decide(&self, _t: u64) -> AllocationVector<F> {
        AllocationVector::uniform_over(self.stats.len(), &self.active)
    }

    fn observe(&mut self, t: u64, alloc: &AllocationVector<F>, rewards: &[F]) {
        observe_all(&mut self.stats, alloc, rewards, self.b);
        self.last = None;
        if t >= 2 && self.active.len() > 1 {
            self.eliminate(t);
        }
    }

    fn status(&self) -> usize {
        self.active.len()
    }

    fn statistics(&self) -> &[ArmStatistics<F>] {
        &self.stats
    }

    fn confidence(&self) -> Option<&RoundConfidence<F>> {
        self.last.as_ref()
    }
}

/// Greedy allocation with polynomially decaying exploration shares.
///
/// Round 1 is uniform. From round 2 on, every arm other than the current
/// leader (highest mean-of-ratios estimate, lowest index on ties) receives
/// `K^{-1} t^{-α}` with `α = 1 + ε/(2 − 2b)`, and the leader gets the rest.
#[derive(Debug, Clone)]
pub struct EpsGreedy<F> {
    alpha: F,
    eps: F,
    b: F,
    current_best: usize,
    stats: Vec<ArmStatistics<F>>,
}

impl<F: Scalar> EpsGreedy<F> {
    /// Requires `b ∈ (1/2, 1]` and `ε ∈ (0, 2b − 1)`.
    ///
    /// At `b = 1` the exponent formula diverges; any `α > 1` is admissible
    /// there and `α = 1 + ε` is used.
    pub fn new(k: usize, b: F, eps: F) -> Result<Self> {
        let half = F::lit(0.5);
        if k < 1 {
            return Err(Error::InvalidPolicy("need at least one arm".into()));
        }
        if !(b > half && b <= F::one()) {
            return Err(Error::InvalidPolicy(format!("eps-greedy requires b in (1/2, 1], got {b}")));
        }
        let two = F::lit(2.0);
        if !(eps > F::zero() && eps < two * b - F::one()) {
            return Err(Error::InvalidPolicy(format!(
                "eps must lie in (0, 2b - 1) = (0, {}), got {eps}",
                two * b - F::one()
            )));
        }
        let alpha = if b < F::one() { F::one() + eps / (two - two * b) } else { F::one() + eps };
        Ok(Self { alpha, eps, b, current_best: 0, stats: vec![ArmStatistics::new(); k] })
    }

    pub fn alpha(&self) -> F {
        self.alpha
    }

    pub fn eps(&self) -> F {
        self.eps
    }

    pub fn current_best(&self) -> usize {
        self.current_best
    }

    /// Share given to each non-leading arm in round `t >= 2`.
    pub fn exploration_share(&self, t: u64) -> F {
        let k = F::from_count(self.stats.len());
        (-self.alpha * F::from_count(t as usize).ln()).exp() / k
    }
}

impl<F: Scalar> Policy<F> for EpsGreedy<F> {
    fn name(&self) -> &'static str {
        "eps-greedy"
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn decide(&self, t: u64) -> AllocationVector<F> {
        let k = self.stats.len();
        if t <= 1 || k == 1 {
            return AllocationVector::uniform(k);
        }
        let share = self.exploration_share(t);
        let mut alloc = vec![share; k];
        alloc[self.current_best] = F::one() - F::from_count(k - 1) * share;
        AllocationVector::new(alloc).expect("greedy allocation lies on the simplex")
    }

    fn observe(&mut self, _t: u64, alloc: &AllocationVector<F>, rewards: &[F]) {
        observe_all(&mut self.stats, alloc, rewards, self.b);
        let est = self.stats.iter().map(|s| s.mu_hat_2().unwrap_or(F::neg_infinity()));
        if let Some(best) = argmax_lowest(est) {
            self.current_best = best;
        }
    }

    fn status(&self) -> usize {
        self.current_best
    }

    fn statistics(&self) -> &[ArmStatistics<F>] {
        &self.stats
    }
}

/// UCB restricted to whole-unit allocations: one arm gets everything each round.
/// Index `μ̂ + σ√(2 ln t / S)`; rounds `1..=K` pull each arm once.
#[derive(Debug, Clone)]
pub struct UcbBinary<F> {
    sigma: F,
    stats: Vec<ArmStatistics<F>>,
    last_pulled: usize,
}

impl<F: Scalar> UcbBinary<F> {
    pub fn new(k: usize, sigma: F) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidPolicy("need at least one arm".into()));
        }
        if !(sigma > F::zero()) {
            return Err(Error::InvalidPolicy(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { sigma, stats: vec![ArmStatistics::new(); k], last_pulled: 0 })
    }

    pub fn index(&self, arm: usize, t: u64) -> F {
        let s = &self.stats[arm];
        let n = s.sum_a;
        s.sum_y / n + self.sigma * (F::lit(2.0) * F::from_count(t as usize).ln() / n).sqrt()
    }

    fn choose(&self, t: u64) -> usize {
        let k = self.stats.len();
        if let Some(unpulled) = self.stats.iter().position(|s| s.count_pos == 0) {
            return unpulled;
        }
        argmax_lowest((0..k).map(|i| self.index(i, t))).expect("non-empty")
    }
}

impl<F: Scalar> Policy<F> for UcbBinary<F> {
    fn name(&self) -> &'static str {
        "ucb-binary"
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn decide(&self, t: u64) -> AllocationVector<F> {
        AllocationVector::vertex(self.stats.len(), self.choose(t))
    }

    fn observe(&mut self, _t: u64, alloc: &AllocationVector<F>, rewards: &[F]) {
        // Binary allocations: every power of A is A itself, so b is irrelevant.
        observe_all(&mut self.stats, alloc, rewards, F::one());
        if let Some(i) = alloc.as_slice().iter().position(|&a| a > F::zero()) {
            self.last_pulled = i;
        }
    }

    fn status(&self) -> usize {
        self.last_pulled
    }

    fn statistics(&self) -> &[ArmStatistics<F>] {
        &self.stats
    }
}

#[derive(Debug, Clone)]
pub struct Uniform<F> {
    stats: Vec<ArmStatistics<F>>,
}

impl<F: Scalar> Uniform<F> {
    pub fn new(k: usize) -> Self {
        Self { stats: vec![ArmStatistics::new(); k] }
    }
}

impl<F: Scalar> Policy<F> for Uniform<F> {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn num_arms(&self) -> usize {
        self.stats.len()
    }

    fn decide(&self, _t: u64) -> AllocationVector<F> {
        AllocationVector::uniform(self.stats.len())
    }

    fn observe(&mut self, _t: u64, alloc: &AllocationVector<F>, rewards: &[F]) {
        observe_all(&mut self.stats, alloc, rewards, F::one());
    }

    fn status(&self) -> usize {
        self.stats.len()
    }

    fn statistics(&self) -> &[ArmStatistics<F>] {
        &self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{regret_increment, sample_rewards, NoiseFamily, NoiseStream};
    use proptest::prelude::*;

    fn drive<F: Scalar>(
        policy: &mut dyn Policy<F>,
        instance: &BanditInstance<F>,
        horizon: u64,
        seed: u64,
        mut each: impl FnMut(u64, &AllocationVector<F>, &dyn Policy<F>),
    ) {
        let stream = NoiseStream::new(seed);
        for t in 1..=horizon {
            let alloc = policy.decide(t);
            let y = sample_rewards(instance, &alloc, &stream, t);
            policy.observe(t, &alloc, &y);
            each(t, &alloc, policy);
        }
    }

    #[test]
    fn se_starts_uniform() {
        let se = SuccessiveElimination::<f64>::new(5, 100, 0.75, 1.0).unwrap();
        assert_eq!(se.decide(1).as_slice(), &[0.2; 5]);
    }

    #[test]
    fn se_allocation_follows_active_set() {
        let mut se = SuccessiveElimination::<f64>::new(4, 100, 0.75, 1.0).unwrap();
        se.active = vec![0, 3];
        assert_eq!(se.decide(7).as_slice(), &[0.5, 0.0, 0.0, 0.5]);
        se.active = vec![2];
        assert_eq!(se.decide(8).as_slice(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn se_never_eliminates_in_round_one() {
        let inst = BanditInstance::new(vec![100.0, 0.0, 0.0], 0.75, 1.0, NoiseFamily::Zero).unwrap();
        let mut se = SuccessiveElimination::new(3, 1000, 0.75, 1e-6).unwrap();
        let a = se.decide(1);
        let y = sample_rewards(&inst, &a, &NoiseStream::new(0), 1);
        se.observe(1, &a, &y);
        assert_eq!(se.active(), &[0, 1, 2]);
        assert!(se.confidence().is_none());
    }

    #[test]
    fn se_zero_noise_eliminates_at_round_two() {
        let inst = BanditInstance::new(vec![2.0, 1.0], 0.75, 0.01, NoiseFamily::Zero).unwrap();
        let mut se = SuccessiveElimination::new(2, 100, 0.75, 0.01).unwrap();
        drive(&mut se, &inst, 100, 1, |_, _, _| {});
        assert_eq!(se.eliminated_at(), &[None, Some(2)]);
        assert_eq!(se.stopping_times(), vec![100, 2]);
        assert_eq!(se.fallbacks(), 0);
    }

    #[test]
    fn se_equal_means_keep_everyone() {
        let inst = BanditInstance::new(vec![1.0; 4], 0.6, 1.0, NoiseFamily::Zero).unwrap();
        let mut se = SuccessiveElimination::new(4, 500, 0.6, 1.0).unwrap();
        drive(&mut se, &inst, 500, 3, |_, _, p| assert_eq!(p.status(), 4));
    }

    #[test]
    fn se_interval_width_matches_formula() {
        let se = SuccessiveElimination::<f64>::new(2, 100, 0.75, 1.0).unwrap();
        // After two rounds at 1/2: r1 = 1 / (2 * 0.5^1.5)
        let r1 = 1.0 / (2.0 * 0.5f64.powf(1.5));
        let expected = 2.0 * 3f64.sqrt() * (2f64.ln() * 100f64.ln()).sqrt() / r1.sqrt();
        assert!((se.ci_width(2, r1) - expected).abs() < 1e-14);
    }

    #[test]
    fn se_rejects_small_b() {
        assert!(SuccessiveElimination::<f64>::new(3, 10, 0.4, 1.0).is_err());
        assert!(SuccessiveElimination::<f64>::new(3, 10, 0.5, 1.0).is_ok());
        assert!(SuccessiveElimination::<f64>::new(3, 10, 1.0, 1.0).is_ok());
    }

    #[test]
    fn se_structural_invariants_under_noise() {
        let inst = BanditInstance::new(vec![6.0, 5.0, 2.0, 1.0, 0.0], 0.8, 1.0, NoiseFamily::Gaussian).unwrap();
        let mut se = SuccessiveElimination::new(5, 3000, 0.8, 1.0).unwrap();
        let mut prev_active = 5;
        let mut prev_alloc = vec![0.0; 5];
        let mut dropped = [false; 5];
        drive(&mut se, &inst, 3000, 42, |t, alloc, p| {
            assert!(p.status() <= prev_active);
            prev_active = p.status();
            for i in 0..5 {
                let a = alloc.get(i);
                if t > 1 && a == 0.0 && prev_alloc[i] > 0.0 {
                    dropped[i] = true;
                }
                if dropped[i] {
                    assert_eq!(a, 0.0, "arm {i} re-entered");
                } else {
                    assert!(a >= prev_alloc[i], "allocation of arm {i} decreased while active");
                }
            }
            prev_alloc = alloc.as_slice().to_vec();
            if let Some(c) = p.confidence() {
                assert!(c.width > 0.0);
            }
        });
        assert!(se.stopping_times().contains(&3000));
        assert!(se.active().len() < 5);
        assert!(se.active().contains(&0));
    }

    #[test]
    fn eps_greedy_schedule() {
        let g = EpsGreedy::<f64>::new(4, 0.75, 0.25).unwrap();
        assert_eq!(g.alpha(), 1.5);
        assert_eq!(g.decide(1).as_slice(), &[0.25; 4]);
        let a = g.decide(10);
        assert!((a.get(1) - 0.25 * 10f64.powf(-1.5)).abs() < 1e-15);
        assert!((a.get(1) - 0.0079057).abs() < 1e-7);
        assert!((a.get(0) - 0.9762830).abs() < 1e-7);
        let late = g.decide(1_000_000);
        assert!(late.get(0) > 1.0 - 1e-9);
    }

    #[test]
    fn eps_greedy_parameter_checks() {
        assert!(EpsGreedy::<f64>::new(3, 0.5, 0.1).is_err());
        assert!(EpsGreedy::<f64>::new(3, 0.75, 0.5).is_err());
        assert!(EpsGreedy::<f64>::new(3, 0.75, 0.0).is_err());
        let g = EpsGreedy::<f64>::new(3, 1.0, 0.5).unwrap();
        assert_eq!(g.alpha(), 1.5);
        let g = EpsGreedy::<f64>::new(3, 0.9, 0.79).unwrap();
        assert!(g.alpha() > 1.0 && g.alpha() < 1.0 / (2.0 - 2.0 * 0.9));
    }

    #[test]
    fn eps_greedy_tracks_mean_of_ratios_leader() {
        let inst = BanditInstance::new(vec![0.5, 2.0, 1.0], 0.75, 1.0, NoiseFamily::Zero).unwrap();
        let mut g = EpsGreedy::new(3, 0.75, 0.3).unwrap();
        drive(&mut g, &inst, 50, 0, |t, a, p| {
            assert_eq!(p.status(), 1);
            assert!(a.as_slice().iter().all(|&x| x > 0.0), "round {t}");
        });
    }

    #[test]
    fn eps_greedy_tie_break_is_index_stable() {
        for means in [vec![1.0, 1.0, 0.5], vec![0.5, 1.0, 1.0], vec![1.0, 0.5, 1.0]] {
            let inst = BanditInstance::new(means.clone(), 0.8, 1.0, NoiseFamily::Zero).unwrap();
            let mut g = EpsGreedy::new(3, 0.8, 0.2).unwrap();
            drive(&mut g, &inst, 5, 0, |_, _, _| {});
            assert_eq!(g.current_best(), means.iter().position(|&m| m == 1.0).unwrap());
        }
    }

    #[test]
    fn ucb_sweeps_then_exploits() {
        let inst = BanditInstance::new(vec![2.0, 1.0], 0.3, 0.01, NoiseFamily::Zero).unwrap();
        let mut u = UcbBinary::new(2, 0.01).unwrap();
        drive(&mut u, &inst, 200, 0, |t, a, _| match t {
            1 => assert_eq!(a.as_slice(), &[1.0, 0.0]),
            2 => assert_eq!(a.as_slice(), &[0.0, 1.0]),
            _ => assert_eq!(a.as_slice(), &[1.0, 0.0], "round {t}"),
        });
    }

    #[test]
    fn ucb_initial_sweep_covers_every_arm() {
        let u = UcbBinary::<f64>::new(4, 1.0).unwrap();
        assert_eq!(u.decide(1).as_slice(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn uniform_is_uniform() {
        let u = Uniform::<f64>::new(3);
        for t in 1..5 {
            assert_eq!(u.decide(t).as_slice(), &[1.0 / 3.0; 3]);
        }
    }

    #[test]
    fn policy_spec_builds_and_rejects() {
        let inst = BanditInstance::new(vec![1.0, 0.5], 0.4, 1.0, NoiseFamily::Gaussian).unwrap();
        let err = PolicySpec::new(PolicyKind::EpsGreedy).with_eps(0.1).build(&inst, 10);
        assert!(matches!(err, Err(Error::Incompatible(_))));
        assert!(PolicySpec::new(PolicyKind::EpsGreedy).build(&inst, 10).is_err());
        assert!(PolicySpec::new(PolicyKind::UcbBinary).build(&inst, 10).is_ok());
        assert_eq!("eps-greedy".parse::<PolicyKind>().unwrap(), PolicyKind::EpsGreedy);
        assert!("thompson".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn generic_policies_run_in_f32() {
        let inst = BanditInstance::<f32>::new(vec![1.0, 0.2, 0.1], 0.9, 1.0, NoiseFamily::Gaussian).unwrap();
        let mut g = EpsGreedy::<f32>::new(3, 0.9, 0.4).unwrap();
        drive(&mut g, &inst, 200, 5, |_, a, _| {
            let total: f32 = a.as_slice().iter().sum();
            assert!((total - 1.0).abs() < 1e-6);
        });
        let mut se = SuccessiveElimination::<f32>::new(3, 200, 0.9, 0.1).unwrap();
        drive(&mut se, &inst, 200, 5, |_, _, _| {});
        assert!(se.active().contains(&0));
    }

    proptest! {
        #[test]
        fn every_decision_is_on_the_simplex(
            means in prop::collection::vec(0.0f64..3.0, 2..6),
            b in 0.55f64..=1.0,
            seed in any::<u64>(),
            which in 0usize..4,
        ) {
            let k = means.len();
            let inst = BanditInstance::new(means, b, 1.0, NoiseFamily::Gaussian).unwrap();
            let mut p: Box<dyn Policy<f64>> = match which {
                0 => Box::new(SuccessiveElimination::new(k, 300, b, 0.2).unwrap()),
                1 => Box::new(EpsGreedy::new(k, b, (2.0 * b - 1.0) / 2.0).unwrap()),
                2 => Box::new(UcbBinary::new(k, 1.0).unwrap()),
                _ => Box::new(Uniform::new(k)),
            };
            let stream = NoiseStream::new(seed);
            for t in 1..=300 {
                let a = p.decide(t);
                let total: f64 = a.as_slice().iter().sum();
                prop_assert!((total - 1.0).abs() <= 1e-12);
                prop_assert!(a.as_slice().iter().all(|&x| x >= 0.0));
                prop_assert!(regret_increment(&inst, &a) >= 0.0);
                // shares below f64's range underflow to zero for extreme alpha
                if which == 1 && b <= 0.95 {
                    prop_assert!(a.as_slice().iter().all(|&x| x > 0.0));
                }
                let y = sample_rewards(&inst, &a, &stream, t);
                p.observe(t, &a, &y);
                if let Some(c) = p.confidence() {
                    prop_assert!(c.arms.iter().all(|&i| c.estimates[i].is_finite()));
                }
            }
        }
    }
}
