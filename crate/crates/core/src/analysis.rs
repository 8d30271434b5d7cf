//! Stopping-time enumeration for the elimination regret bound, estimation of
//! the noise order, and power-law fits of regret curves.

use std::path::Path;

use serde::Deserialize;

use crate::env::{sample_rewards, AllocationVector, BanditInstance, InstanceSpec, NoiseStream};
use crate::error::{Error, Result};
use crate::harness::fmt_f64;

pub const MAX_LEMMA_K: usize = 4;
pub const MAX_LEMMA_T: u64 = 16;

/// Last active round of every arm under successive elimination. The arm
/// that survives longest stays until the horizon.
///
/// In round `t` each arm with `τ_i ≥ t` receives `1 / #{j : τ_j ≥ t}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoppingTimeProfile {
    taus: Vec<u64>,
    horizon: u64,
}

impl StoppingTimeProfile {
    pub fn new(taus: Vec<u64>, horizon: u64) -> Result<Self> {
        if taus.is_empty() {
            return Err(Error::InvalidInstance("profile needs at least one arm".into()));
        }
        if taus.iter().any(|&t| t < 1 || t > horizon) {
            return Err(Error::InvalidInstance(format!("stopping times must lie in [1, {horizon}]")));
        }
        if taus.iter().max() != Some(&horizon) {
            return Err(Error::InvalidInstance("the last survivor must reach the horizon".into()));
        }
        Ok(Self { taus, horizon })
    }

    pub fn taus(&self) -> &[u64] {
        &self.taus
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn num_arms(&self) -> usize {
        self.taus.len()
    }

    /// Allocation of `arm` in round `t`.
    pub fn allocation(&self, arm: usize, t: u64) -> f64 {
        if t > self.taus[arm] {
            return 0.0;
        }
        let active = self.taus.iter().filter(|&&tau| tau >= t).count();
        1.0 / active as f64
    }

    pub fn allocation_vector(&self, t: u64) -> AllocationVector<f64> {
        let alloc = (0..self.num_arms()).map(|i| self.allocation(i, t)).collect();
        AllocationVector::new(alloc).expect("profile allocations lie on the simplex")
    }

    /// `Σ_i √(Σ_{s ≤ τ_i} A_{si}^{2b})`.
    pub fn lhs(&self, b: f64) -> f64 {
        (0..self.num_arms())
            .map(|i| (1..=self.taus[i]).map(|s| self.allocation(i, s).powf(2.0 * b)).sum::<f64>().sqrt())
            .sum()
    }
}

/// `√(1/(2−2b)) · K^{1−b} · √T`
pub fn lemma1_rhs(k: usize, horizon: u64, b: f64) -> f64 {
    (1.0 / (2.0 - 2.0 * b)).sqrt() * (k as f64).powf(1.0 - b) * (horizon as f64).sqrt()
}

/// Same quantity as [`StoppingTimeProfile::lhs`] for a sorted profile, phase by phase.
fn sorted_lhs(sorted: &[u64], b: f64) -> f64 {
    let k = sorted.len();
    let mut l = 0.0;
    let mut prev = 0;
    let mut total = 0.0;
    for (m, &tau) in sorted.iter().enumerate() {
        let share = 1.0 / (k - m) as f64;
        l += (tau - prev) as f64 * share.powf(2.0 * b);
        prev = tau;
        total += l.sqrt();
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Report {
    pub arms: usize,
    pub horizon: u64,
    pub b: f64,
    pub max_lhs: f64,
    /// Sorted stopping times attaining `max_lhs` (first in lexicographic order).
    pub argmax: Vec<u64>,
    pub rhs: f64,
    /// `rhs − max_lhs`
    pub slack: f64,
    pub profiles: u64,
    pub holds: bool,
}

/// Maximizes the left-hand side over all sorted stopping-time profiles
/// `τ_(1) ≤ … ≤ τ_(K−1) ≤ τ_(K) = T`. By symmetry these cover every profile.
pub fn lemma1_bruteforce(k: usize, horizon: u64, b: f64) -> Result<Lemma1Report> {
    if !(1..=MAX_LEMMA_K).contains(&k) || !(1..=MAX_LEMMA_T).contains(&horizon) {
        return Err(Error::EnumerationBound(format!(
            "need 1 <= K <= {MAX_LEMMA_K} and 1 <= T <= {MAX_LEMMA_T}, got K = {k}, T = {horizon}"
        )));
    }
    if !(0.5..1.0).contains(&b) {
        return Err(Error::Config(format!("b must lie in [1/2, 1), got {b}")));
    }
    let mut taus = vec![1u64; k];
    taus[k - 1] = horizon;
    let mut best = (f64::NEG_INFINITY, taus.clone());
    let mut profiles = 0u64;
    loop {
        profiles += 1;
        let v = sorted_lhs(&taus, b);
        if v > best.0 {
            best = (v, taus.clone());
        }
        // next non-decreasing tuple in the first K−1 slots, each <= T
        let mut pos = k - 1;
        loop {
            if pos == 0 {
                let rhs = lemma1_rhs(k, horizon, b);
                return Ok(Lemma1Report {
                    arms: k,
                    horizon,
                    b,
                    max_lhs: best.0,
                    argmax: best.1,
                    rhs,
                    slack: rhs - best.0,
                    profiles,
                    // equality is attained at b = 1/2 (every arm kept to the horizon)
                    holds: best.0 <= rhs * (1.0 + 8.0 * f64::EPSILON),
                });
            }
            pos -= 1;
            if taus[pos] < horizon {
                taus[pos] += 1;
                let v = taus[pos];
                for slot in taus.iter_mut().take(k - 1).skip(pos + 1) {
                    *slot = v;
                }
                break;
            }
        }
    }
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope (NaN with fewer than 3 points).
    pub slope_se: f64,
}

pub fn least_squares(points: &[(f64, f64)]) -> Result<LineFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::DegenerateDesign("need at least 2 points".into()));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateDesign("all regressor values are identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_se = if points.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(LineFit { slope, intercept, r_squared, slope_se })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BEstimate {
    pub b_hat: f64,
    pub intercept: f64,
    pub std_error: f64,
    pub n_pairs: usize,
    /// Pairs with `D = 0`, left out of the regression.
    pub dropped: usize,
}

/// Regresses `ln|D|` on `ln a`; the slope estimates `b`.
///
/// `D = Y_{t+L} − Y_t` for two rounds with the same allocation `a`, so the
/// mean cancels and `D = a^b (ξ' − ξ)`. The absolute value is needed because
/// `D` is symmetric about zero; the intercept absorbs `E ln|ξ' − ξ|`.
pub fn estimate_b(pairs: &[(f64, f64)]) -> Result<BEstimate> {
    if pairs.iter().any(|&(a, _)| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::Config("allocations must lie in (0, 1]".into()));
    }
    let used: Vec<(f64, f64)> =
        pairs.iter().filter(|&&(_, d)| d != 0.0).map(|&(a, d)| (a.ln(), d.abs().ln())).collect();
    if used.is_empty() {
        return Err(Error::NoSignal("every difference D_t is zero".into()));
    }
    let fit = least_squares(&used)?;
    Ok(BEstimate {
        b_hat: fit.slope,
        intercept: fit.intercept,
        std_error: fit.slope_se,
        n_pairs: used.len(),
        dropped: pairs.len() - used.len(),
    })
}

/// Burn-in protocol for estimating `b`: cycle through the allocation levels
/// twice (`2L` rounds) and difference matched rounds.
///
/// In repetition `r` the probed arm `r mod K` gets `a_l` and the next arm gets
/// the remaining `1 − a_l`; both arms contribute a pair per level (pairs with
/// zero allocation are skipped). Repetitions occupy consecutive blocks of rounds.
pub fn burn_in_pairs(
    instance: &BanditInstance<f64>,
    levels: &[f64],
    repeats: usize,
    stream: &NoiseStream,
) -> Result<Vec<(f64, f64)>> {
    let k = instance.num_arms();
    let l = levels.len();
    if l == 0 || levels.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::Config("allocation levels must be non-empty and lie in (0, 1]".into()));
    }
    let mut pairs = Vec::with_capacity(2 * l * repeats);
    for rep in 0..repeats {
        let probe = rep % k;
        let partner = (rep + 1) % k;
        let start = (rep * 2 * l) as u64 + 1;
        for (j, &a) in levels.iter().enumerate() {
            let mut alloc = vec![0.0; k];
            alloc[probe] = a;
            alloc[partner] += 1.0 - a;
            let alloc = AllocationVector::new(alloc)?;
            let first = sample_rewards(instance, &alloc, stream, start + j as u64);
            let second = sample_rewards(instance, &alloc, stream, start + (l + j) as u64);
            for arm in [probe, partner] {
                let share = alloc.get(arm);
                if share > 0.0 {
                    pairs.push((share, second[arm] - first[arm]));
                }
            }
        }
    }
    Ok(pairs)
}

/// `levels` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, levels: usize) -> Vec<f64> {
    if levels == 1 {
        return vec![lo];
    }
    (0..levels).map(|i| lo + (hi - lo) * i as f64 / (levels - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub grid: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Slope of `ln(regret)` against `ln(scale)`.
pub fn fit_rate_exponent(grid: &[(f64, f64)]) -> Result<RateFit> {
    if grid.len() < 4 {
        return Err(Error::Config(format!("need at least 4 grid points, got {}", grid.len())));
    }
    if let Some(p) = grid.iter().find(|p| !(p.0 > 0.0) || !(p.1 > 0.0)) {
        return Err(Error::Config(format!("scales and regrets must be positive, got {p:?}")));
    }
    let logs: Vec<(f64, f64)> = grid.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let fit = least_squares(&logs)?;
    if !fit.slope.is_finite() {
        return Err(Error::Numerical("non-finite slope".into()));
    }
    Ok(RateFit { grid: grid.to_vec(), slope: fit.slope, intercept: fit.intercept, r_squared: fit.r_squared })
}

/// Settings of the burn-in used by `estimate-b`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurnInSection {
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_low")]
    pub low: f64,
    #[serde(default = "default_high")]
    pub high: f64,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_levels() -> usize {
    50
}
fn default_low() -> f64 {
    0.1
}
fn default_high() -> f64 {
    1.0
}
fn default_repeats() -> usize {
    200
}

impl Default for BurnInSection {
    fn default() -> Self {
        Self { levels: default_levels(), low: default_low(), high: default_high(), repeats: default_repeats(), seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurnInConfig {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub burn_in: BurnInSection,
}

impl BurnInConfig {
    /// Accepts a run config too: the `policy` and `run` tables are ignored.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut value: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        value.remove("policy");
        value.remove("run");
        let cfg: Self = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let s = &cfg.burn_in;
        if s.levels < 2 || s.repeats < 1 || !(s.low > 0.0 && s.low < s.high && s.high <= 1.0) {
            return Err(Error::Config("burn_in needs levels >= 2, repeats >= 1 and 0 < low < high <= 1".into()));
        }
        Ok(cfg)
    }

    pub fn estimate(&self) -> Result<BEstimate> {
        let instance = self.instance.build()?;
        let s = &self.burn_in;
        let pairs = burn_in_pairs(&instance, &linspace(s.low, s.high, s.levels), s.repeats, &NoiseStream::new(s.seed))?;
        estimate_b(&pairs)
    }
}

pub const LEMMA1_HEADER: [&str; 6] = ["K", "T", "b", "max_lhs", "rhs", "slack"];
pub const B_ESTIMATE_HEADER: [&str; 4] = ["true_b", "b_hat", "n_pairs", "dropped"];

pub fn write_lemma1(reports: &[Lemma1Report], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(LEMMA1_HEADER)?;
    for r in reports {
        w.write_record([
            r.arms.to_string(),
            r.horizon.to_string(),
            fmt_f64(r.b),
            fmt_f64(r.max_lhs),
            fmt_f64(r.rhs),
            fmt_f64(r.slack),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_b_estimates(rows: &[(f64, BEstimate)], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(B_ESTIMATE_HEADER)?;
    for (true_b, e) in rows {
        w.write_record([fmt_f64(*true_b), fmt_f64(e.b_hat), e.n_pairs.to_string(), e.dropped.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
