//! Bandit instances and the divisible-resource reward law `Y = A·μ + A^b·ξ`.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{argmax_lowest, Scalar};

/// Noise law shared by every arm. Each family is mean zero and
/// σ-sub-Gaussian once scaled by the instance's `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    /// `σ·N(0,1)`.
    Gaussian,
    /// `±σ` with equal probability.
    Rademacher,
    /// Uniform on `[-σ, σ]` (variance σ²/3).
    Uniform,
    /// Identically zero. Test fixture for deterministic traces.
    Zero,
}

impl NoiseFamily {
    pub fn name(self) -> &'static str {
        match self {
            NoiseFamily::Gaussian => "gaussian",
            NoiseFamily::Rademacher => "rademacher",
            NoiseFamily::Uniform => "uniform",
            NoiseFamily::Zero => "zero",
        }
    }

    /// Unit-scale draw.
    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            NoiseFamily::Gaussian => StandardNormal.sample(rng),
            NoiseFamily::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseFamily::Uniform => rng.random_range(-1.0..=1.0),
            NoiseFamily::Zero => 0.0,
        }
    }
}

impl FromStr for NoiseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseFamily::Gaussian),
            "rademacher" => Ok(NoiseFamily::Rademacher),
            "uniform" => Ok(NoiseFamily::Uniform),
            "zero" => Ok(NoiseFamily::Zero),
            other => Err(Error::Config(format!("unknown noise family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance<F> {
    means: Vec<F>,
    b: F,
    sigma: F,
    noise: NoiseFamily,
    best: usize,
}

impl<F: Scalar> BanditInstance<F> {
    pub fn new(means: Vec<F>, b: F, sigma: F, noise: NoiseFamily) -> Result<Self> {
        if means.len() < 2 {
            return Err(Error::InvalidInstance(format!("need at least 2 arms, got {}", means.len())));
        }
        if let Some(m) = means.iter().find(|m| !(**m >= F::zero()) || !m.is_finite()) {
            return Err(Error::InvalidInstance(format!("mean {m} must be finite and >= 0")));
        }
        if !(b >= F::zero() && b <= F::one()) {
            return Err(Error::InvalidInstance(format!("b = {b} outside [0, 1]")));
        }
        if !(sigma > F::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidInstance(format!("sigma = {sigma} must be positive")));
        }
        let best = argmax_lowest(means.iter().copied()).expect("non-empty");
        Ok(Self { means, b, sigma, noise, best })
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[F] {
        &self.means
    }

    pub fn b(&self) -> F {
        self.b
    }

    pub fn sigma(&self) -> F {
        self.sigma
    }

    pub fn noise(&self) -> NoiseFamily {
        self.noise
    }

    /// Lowest index among the arms with the largest mean.
    pub fn best_arm(&self) -> usize {
        self.best
    }

    pub fn best_mean(&self) -> F {
        self.means[self.best]
    }

    pub fn gap(&self, arm: usize) -> F {
        self.best_mean() - self.means[arm]
    }

    pub fn gaps(&self) -> Vec<F> {
        (0..self.num_arms()).map(|i| self.gap(i)).collect()
    }

    pub fn max_gap(&self) -> F {
        self.gaps().into_iter().fold(F::zero(), F::max)
    }

    pub fn with_noise(mut self, noise: NoiseFamily) -> Self {
        self.noise = noise;
        self
    }
}

/// A point on the K-simplex: the split of one period's unit resource.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationVector<F> {
    alloc: Vec<F>,
}

impl<F: Scalar> AllocationVector<F> {
    pub fn new(alloc: Vec<F>) -> Result<Self> {
        if alloc.is_empty() {
            return Err(Error::InvalidAllocation("empty allocation".into()));
        }
        if let Some(a) = alloc.iter().find(|a| !(**a >= F::zero() && **a <= F::one())) {
            return Err(Error::InvalidAllocation(format!("entry {a} outside [0, 1]")));
        }
        let total: F = alloc.iter().copied().sum();
        if (total - F::one()).abs() > Self::tolerance(alloc.len()) {
            return Err(Error::InvalidAllocation(format!("entries sum to {total}, not 1")));
        }
        Ok(Self { alloc })
    }

    /// Slack allowed on `Σ alloc = 1`: 1e-12 in double precision, a few ulps per arm otherwise.
    pub fn tolerance(k: usize) -> F {
        F::lit(1e-12).max(F::epsilon() * F::from_count(4 * k))
    }

    pub fn uniform(k: usize) -> Self {
        let share = F::one() / F::from_count(k);
        Self { alloc: vec![share; k] }
    }

    /// Unit mass on `arm`.
    pub fn vertex(k: usize, arm: usize) -> Self {
        let mut alloc = vec![F::zero(); k];
        alloc[arm] = F::one();
        Self { alloc }
    }

    /// Equal split over `arms` (must be non-empty, distinct, in range).
    pub fn uniform_over(k: usize, arms: &[usize]) -> Self {
        let share = F::one() / F::from_count(arms.len());
        let mut alloc = vec![F::zero(); k];
        for &i in arms {
            alloc[i] = share;
        }
        Self { alloc }
    }

    pub fn as_slice(&self) -> &[F] {
        &self.alloc
    }

    pub fn len(&self) -> usize {
        self.alloc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alloc.is_empty()
    }

    pub fn get(&self, arm: usize) -> F {
        self.alloc[arm]
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Scrambles `base + index` into a stream seed. Bijective on `u64`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix(base.wrapping_add(index))
}

/// Counter-based noise source: the draw for `(round, arm)` depends only on
/// the stream seed and that key, never on how many draws came before.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Generator dedicated to one `(round, arm)` cell.
    pub fn cell_rng(&self, round: u64, arm: usize) -> SplitMix64 {
        let key = splitmix(self.seed ^ splitmix(round.wrapping_mul(0xD1B5_4A32_D192_ED03) ^ arm as u64));
        SplitMix64::seed_from_u64(key)
    }

    /// Unit-scale draw of `family` for `(round, arm)`.
    pub fn unit_draw(&self, family: NoiseFamily, round: u64, arm: usize) -> f64 {
        if family == NoiseFamily::Zero {
            return 0.0;
        }
        family.draw(&mut self.cell_rng(round, arm))
    }

    /// σ-scaled noise `ξ` for `(round, arm)`.
    pub fn noise<F: Scalar>(&self, instance: &BanditInstance<F>, round: u64, arm: usize) -> F {
        instance.sigma() * F::lit(self.unit_draw(instance.noise(), round, arm))
    }
}

/// Rewards for one round: `Y_i = A_i μ_i + A_i^b ξ_i`, with `Y_i = 0` exactly when `A_i = 0`.
pub fn sample_rewards<F: Scalar>(
    instance: &BanditInstance<F>,
    alloc: &AllocationVector<F>,
    stream: &NoiseStream,
    round: u64,
) -> Vec<F> {
    let mut out = vec![F::zero(); instance.num_arms()];
    sample_rewards_into(instance, alloc, stream, round, &mut out);
    out
}

pub fn sample_rewards_into<F: Scalar>(
    instance: &BanditInstance<F>,
    alloc: &AllocationVector<F>,
    stream: &NoiseStream,
    round: u64,
    out: &mut [F],
) {
    debug_assert_eq!(alloc.len(), instance.num_arms());
    let b = instance.b();
    // (A, A^b) of the previous arm; policies often hand many arms the same share.
    let mut last = (F::zero(), F::zero());
    for (i, y) in out.iter_mut().enumerate() {
        let a = alloc.get(i);
        *y = if a > F::zero() {
            if a != last.0 {
                last = (a, a.pow_or_zero(b));
            }
            a * instance.means()[i] + last.1 * stream.noise(instance, round, i)
        } else {
            F::zero()
        };
    }
}

/// Pseudo-regret of one round: `μ* − Σ A_i μ_i = Σ A_i Δ_i`.
pub fn regret_increment<F: Scalar>(instance: &BanditInstance<F>, alloc: &AllocationVector<F>) -> F {
    alloc.as_slice().iter().enumerate().map(|(i, &a)| a * instance.gap(i)).sum()
}

/// Instance description as it appears in config files.
///
/// Either `means` is given explicitly, or the two-level construction
/// `arms`/`gap`/`base_mean` is used: arm 0 has mean `base_mean + gap`,
/// every other arm has `base_mean`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    #[serde(default)]
    pub means: Option<Vec<f64>>,
    #[serde(default)]
    pub arms: Option<usize>,
    #[serde(default)]
    pub gap: Option<f64>,
    #[serde(default)]
    pub base_mean: Option<f64>,
    pub b: f64,
    pub sigma: f64,
    #[serde(default = "default_noise")]
    pub noise: String,
}

fn default_noise() -> String {
    "gaussian".into()
}

impl InstanceSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolved_means(&self) -> Result<Vec<f64>> {
        match (&self.means, self.arms, self.gap) {
            (Some(m), None, None) => Ok(m.clone()),
            (None, Some(k), Some(gap)) => {
                let base = self.base_mean.unwrap_or(0.5);
                let mut means = vec![base; k];
                if k > 0 {
                    means[0] = base + gap;
                }
                Ok(means)
            }
            _ => Err(Error::Config("instance needs either `means` or both `arms` and `gap`".into())),
        }
    }

    pub fn build(&self) -> Result<BanditInstance<f64>> {
        let noise: NoiseFamily = self.noise.parse()?;
        BanditInstance::new(self.resolved_means()?, self.b, self.sigma, noise).map_err(|e| Error::Config(e.to_string()))
    }
}
