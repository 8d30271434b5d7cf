//! Numerical checks of the concentration bound for monotone weights.
//!
//! For a non-decreasing positive weight sequence `a` and independent noise `ξ`,
//! the normalized sum `Σ a_s ξ_s / ‖a‖` is controlled by rewriting it in the
//! increments `b_s = a_s − a_{s−1}` and suffix sums `f_s = ξ_s + … + ξ_t`.
//! The deterministic part of the argument reduces to the matrix inequality
//! `A ≺ (3/2) ln t · B` with `A = V Vᵀ`, `V_s = √(t−s+1)`, `B = D Dᵀ`, whose
//! sharp constant is `Σ_{s≤t} (√s − √(s−1))²`.

use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::env::{NoiseFamily, NoiseStream};
use crate::error::{Error, Result};
use crate::harness::{fmt_f64, RegretTrace};
use crate::scalar::{KahanSum, Scalar};
use crate::BanditInstance;

/// Largest `t` accepted by the dense eigensolve.
pub const MAX_SPECTRAL_T: usize = 2000;
/// Enumeration limits for the SE-reachable supremum.
pub const MAX_ENUM_T: usize = 14;
pub const MAX_ENUM_K: usize = 4;

/// A non-decreasing weight sequence together with its increment form.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneWeightProblem<F> {
    weights: Vec<F>,
    increments: Vec<F>,
}

impl<F: Scalar> MonotoneWeightProblem<F> {
    /// `weights` must be non-decreasing in `(0, 1]`.
    pub fn new(weights: Vec<F>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInstance("empty weight sequence".into()));
        }
        if !(weights[0] > F::zero()) || weights.iter().any(|&w| !(w <= F::one())) {
            return Err(Error::InvalidInstance("weights must lie in (0, 1]".into()));
        }
        if weights.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidInstance("weights must be non-decreasing".into()));
        }
        let mut increments = Vec::with_capacity(weights.len());
        let mut prev = F::zero();
        for &w in &weights {
            increments.push(w - prev);
            prev = w;
        }
        Ok(Self { weights, increments })
    }

    /// Rebuilds the weights from increments by prefix sums.
    pub fn from_increments(increments: &[F]) -> Result<Self> {
        let mut acc = F::zero();
        let weights = increments
            .iter()
            .map(|&b| {
                acc += b;
                acc
            })
            .collect();
        if increments.iter().skip(1).any(|&b| b < F::zero()) {
            return Err(Error::InvalidInstance("increments after the first must be >= 0".into()));
        }
        Self::new(weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn increments(&self) -> &[F] {
        &self.increments
    }

    /// `Σ a_s ξ_s`
    pub fn weighted_sum(&self, xi: &[F]) -> F {
        self.weights.iter().zip(xi).map(|(&a, &x)| a * x).sum()
    }

    /// `Σ b_s f_s`; equals [`weighted_sum`](Self::weighted_sum).
    pub fn transformed_sum(&self, xi: &[F]) -> F {
        self.increments.iter().zip(suffix_sums(xi)).map(|(&b, f)| b * f).sum()
    }

    /// `Σ a_s ξ_s / √(Σ a_s²)`
    pub fn normalized_sum(&self, xi: &[F]) -> F {
        let norm = self.weights.iter().map(|&a| a * a).sum::<F>().sqrt();
        self.weighted_sum(xi) / norm
    }
}

/// `f_s = ξ_s + … + ξ_t`.
pub fn suffix_sums<F: Scalar>(xi: &[F]) -> Vec<F> {
    let mut out = vec![F::zero(); xi.len()];
    let mut acc = F::zero();
    for (s, &x) in xi.iter().enumerate().rev() {
        acc += x;
        out[s] = acc;
    }
    out
}

/// `Σ_{s=1}^t (√s − √(s−1))²`, Kahan-summed. Each term is evaluated as
/// `1 / (√s + √(s−1))²` to avoid cancellation.
pub fn schur_constant<F: Scalar>(t: usize) -> F {
    let mut acc = KahanSum::new();
    for s in 1..=t {
        acc.add(schur_term::<F>(s));
    }
    acc.value()
}

fn schur_term<F: Scalar>(s: usize) -> F {
    let d = F::from_count(s).sqrt() + F::from_count(s - 1).sqrt();
    F::one() / (d * d)
}

/// Running values of [`schur_constant`] for `t = 1..=t_max`.
pub fn schur_constants<F: Scalar>(t_max: usize) -> Vec<F> {
    let mut acc = KahanSum::new();
    (1..=t_max)
        .map(|s| {
            acc.add(schur_term::<F>(s));
            acc.value()
        })
        .collect()
}

/// Harmonic-integral upper bound `5/4 + (1/4) ln t`.
pub fn harmonic_bound<F: Scalar>(t: usize) -> F {
    F::lit(1.25) + F::lit(0.25) * F::from_count(t).ln()
}

/// The constant `(3/2) ln t` of the matrix inequality.
pub fn log_bound<F: Scalar>(t: usize) -> F {
    F::lit(1.5) * F::from_count(t).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCertificate {
    pub t: usize,
    /// Largest generalized eigenvalue from the dense eigensolve.
    pub lambda_max: f64,
    pub schur_sum: f64,
    /// `(3/2) ln t`
    pub bound: f64,
    /// `bound − schur_sum`
    pub rank1_gap: f64,
    /// Whether `λ_max < (3/2) ln t`.
    pub holds: bool,
}

/// `D_{ij} = 1` when `i + j ≤ t + 1` (1-based), so `D Dᵀ = B`.
pub fn d_matrix(t: usize) -> DMatrix<f64> {
    DMatrix::from_fn(t, t, |i, j| if i + j < t { 1.0 } else { 0.0 })
}

/// Closed-form inverse of [`d_matrix`]: ones on the anti-diagonal and −1
/// immediately to their right.
pub fn d_inverse(t: usize) -> DMatrix<f64> {
    DMatrix::from_fn(t, t, |i, j| {
        if i + j == t - 1 {
            1.0
        } else if i >= 1 && i + j == t {
            -1.0
        } else {
            0.0
        }
    })
}

/// `B_{ij} = t + 1 − max(i, j)` (1-based): the Gram matrix of prefix sums.
pub fn b_matrix(t: usize) -> DMatrix<f64> {
    DMatrix::from_fn(t, t, |i, j| (t - i.max(j)) as f64)
}

/// `A = V Vᵀ` with `V_s = √(t − s + 1)`.
pub fn a_matrix(t: usize) -> DMatrix<f64> {
    let v = DVector::from_fn(t, |s, _| ((t - s) as f64).sqrt());
    &v * v.transpose()
}

/// Builds `A` and `B`, solves the generalized eigenproblem densely through
/// `D⁻¹ A D⁻ᵀ`, and checks the result against the rank-one closed form.
pub fn verify_matrix_inequality(t: usize) -> Result<SpectralCertificate> {
    if !(2..=MAX_SPECTRAL_T).contains(&t) {
        return Err(Error::EnumerationBound(format!("spectral check needs 2 <= t <= {MAX_SPECTRAL_T}, got {t}")));
    }
    let d = d_matrix(t);
    let d_inv = d_inverse(t);
    let ident_err = (&d * &d_inv - DMatrix::<f64>::identity(t, t)).abs().max();
    if ident_err > 1e-12 {
        return Err(Error::Numerical(format!("D·D⁻¹ deviates from I by {ident_err:e}")));
    }
    let b = &d * d.transpose();
    let b_err = (&b - b_matrix(t)).abs().max();
    if b_err > 1e-12 {
        return Err(Error::Numerical(format!("D·Dᵀ deviates from B by {b_err:e}")));
    }
    let a = a_matrix(t);
    let m = &d_inv * a * d_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Numerical(format!("eigensolve did not converge at t = {t}")))?;
    let lambda_max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let schur_sum = schur_constant::<f64>(t);
    if (lambda_max - schur_sum).abs() > 1e-8 {
        return Err(Error::Numerical(format!("t = {t}: eigensolve gives {lambda_max}, closed form {schur_sum}")));
    }
    let bound = log_bound::<f64>(t);
    Ok(SpectralCertificate { t, lambda_max, schur_sum, bound, rank1_gap: bound - schur_sum, holds: lambda_max < bound })
}

/// Exact supremum of `Σ a_s^b ξ_s / √(Σ a_s^{2b})` over the weight sequences
/// successive elimination can produce for one arm: non-decreasing, with values
/// in `{1/K, 1/(K−1), …, 1}`.
pub fn exact_sup_se_reachable(t: usize, k: usize, xi: &[f64], b: f64) -> Result<f64> {
    if t == 0 || t > MAX_ENUM_T || k == 0 || k > MAX_ENUM_K {
        return Err(Error::EnumerationBound(format!(
            "exact supremum needs 1 <= t <= {MAX_ENUM_T} and 1 <= K <= {MAX_ENUM_K}, got t = {t}, K = {k}"
        )));
    }
    if xi.len() != t {
        return Err(Error::InvalidInstance(format!("expected {t} noise values, got {}", xi.len())));
    }
    Ok(exact_sup_unchecked(k, xi, b))
}

fn exact_sup_unchecked(k: usize, xi: &[f64], b: f64) -> f64 {
    let t = xi.len();
    let levels: Vec<f64> = (0..k).map(|j| (1.0 / (k - j) as f64).powf(b)).collect();
    let mut prefix = vec![0.0; t + 1];
    for s in 0..t {
        prefix[s + 1] = prefix[s] + xi[s];
    }
    let mut best = f64::NEG_INFINITY;
    // Level j covers positions [start, end); the last level always ends at t.
    fn walk(level: usize, start: usize, num: f64, den: f64, levels: &[f64], prefix: &[f64], best: &mut f64) {
        let t = prefix.len() - 1;
        let w = levels[level];
        if level + 1 == levels.len() {
            let num = num + w * (prefix[t] - prefix[start]);
            let den = den + w * w * (t - start) as f64;
            *best = best.max(num / den.sqrt());
            return;
        }
        for end in start..=t {
            let n = num + w * (prefix[end] - prefix[start]);
            let d = den + w * w * (end - start) as f64;
            walk(level + 1, end, n, d, levels, prefix, best);
        }
    }
    walk(0, 0, 0.0, 0.0, &levels, &prefix, &mut best);
    best
}

/// Number of sequences enumerated by [`exact_sup_se_reachable`]: `C(t+K−1, K−1)`.
pub fn se_reachable_count(t: usize, k: usize) -> u64 {
    let mut c = 1u64;
    for i in 1..k as u64 {
        c = c * (t as u64 + i) / i;
    }
    c
}

/// Supremum over arbitrary nonnegative weights: `√(Σ ξ_s² 1(ξ_s > 0))`,
/// or `max ξ_s` when no coordinate is positive.
pub fn unconstrained_sup(xi: &[f64]) -> f64 {
    let pos: f64 = xi.iter().filter(|&&x| x > 0.0).map(|x| x * x).sum();
    if pos > 0.0 {
        pos.sqrt()
    } else {
        xi.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Supremum over all non-decreasing positive weights, computed exactly.
///
/// The feasible directions form the cone `{0 ≤ c_1 ≤ … ≤ c_t}`; when the
/// projection of `ξ` onto it is non-zero the supremum is its norm, and the
/// projection is isotonic regression clipped at zero. Otherwise the best
/// direction is an extreme ray `(0,…,0,1,…,1)/√k`.
pub fn monotone_sup(xi: &[f64]) -> f64 {
    let fit = isotonic_fit(xi);
    let norm: f64 = fit.iter().map(|&v| v.max(0.0).powi(2)).sum::<f64>().sqrt();
    if norm > 0.0 {
        return norm;
    }
    let t = xi.len();
    let mut acc = 0.0;
    let mut best = f64::NEG_INFINITY;
    for k in 1..=t {
        acc += xi[t - k];
        best = best.max(acc / (k as f64).sqrt());
    }
    best
}

/// Least-squares non-decreasing fit (pool-adjacent-violators).
pub fn isotonic_fit(y: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (m2, n2) = blocks[blocks.len() - 1];
            let (m1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let n = n1 + n2;
            *blocks.last_mut().unwrap() = ((m1 * n1 as f64 + m2 * n2 as f64) / n as f64, n);
        }
    }
    blocks.into_iter().flat_map(|(m, n)| std::iter::repeat_n(m, n)).collect()
}

/// Objective in increment coordinates: `Σ b_s f_s / √(Σ_s (b_1 + … + b_s)²)`.
fn transformed_ratio(incr: &[f64], f: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut prefix = 0.0;
    for (b, fs) in incr.iter().zip(f) {
        num += b * fs;
        prefix += b;
        den += prefix * prefix;
    }
    if den > 0.0 {
        num / den.sqrt()
    } else {
        f64::NEG_INFINITY
    }
}

/// Heuristic lower bound on the monotone supremum: projected gradient ascent
/// over nonnegative increments from several random starts.
pub fn projected_ascent_sup(xi: &[f64], restarts: usize, seed: u64) -> f64 {
    let t = xi.len();
    let f = suffix_sums(xi);
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    // every extreme ray of the cone, then random interior points
    let mut starts: Vec<Vec<f64>> = (0..t)
        .map(|j| {
            let mut e = vec![0.0; t];
            e[j] = 1.0;
            e
        })
        .collect();
    for r in 0..restarts {
        starts.push(
            (0..t).map(|_| if r == 0 || rng.random::<f64>() < 0.5 { rng.random::<f64>() } else { 0.0 }).collect(),
        );
    }
    for mut x in starts {
        if x.iter().all(|&v| v <= 0.0) {
            x[0] = 1.0;
        }
        let mut val = transformed_ratio(&x, &f);
        let mut step = 0.5;
        for _ in 0..400 {
            let g = ratio_gradient(&x, &f);
            let mut improved = false;
            while step > 1e-10 {
                let cand: Vec<f64> = x.iter().zip(&g).map(|(v, d)| (v + step * d).max(0.0)).collect();
                let cv = transformed_ratio(&cand, &f);
                if cv > val {
                    let scale = cand.iter().map(|v| v * v).sum::<f64>().sqrt();
                    x = cand.into_iter().map(|v| v / scale).collect();
                    val = cv;
                    step *= 1.5;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        best = best.max(val);
    }
    best
}

fn ratio_gradient(incr: &[f64], f: &[f64]) -> Vec<f64> {
    let t = incr.len();
    let mut prefix = vec![0.0; t];
    let mut acc = 0.0;
    for s in 0..t {
        acc += incr[s];
        prefix[s] = acc;
    }
    let num: f64 = incr.iter().zip(f).map(|(b, x)| b * x).sum();
    let den: f64 = prefix.iter().map(|p| p * p).sum();
    let root = den.sqrt();
    // d den / d b_j = 2 Σ_{s ≥ j} prefix_s
    let mut tail = vec![0.0; t];
    let mut acc = 0.0;
    for s in (0..t).rev() {
        acc += prefix[s];
        tail[s] = acc;
    }
    (0..t).map(|j| f[j] / root - num * tail[j] / (den * root)).collect()
}

/// How the supremum inside the tail event is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupMethod {
    /// Exhaustive over SE-reachable weights with `K` levels (ground truth on that set).
    ExactReachable { arms: usize },
    /// Projected gradient ascent over all monotone weights (a lower bound).
    ProjectedAscent { restarts: usize },
    /// Closed form over all monotone weights.
    Isotonic,
}

impl SupMethod {
    pub fn evaluate(&self, xi: &[f64], trial_seed: u64) -> Result<f64> {
        match *self {
            SupMethod::ExactReachable { arms } => exact_sup_se_reachable(xi.len(), arms, xi, 1.0),
            SupMethod::ProjectedAscent { restarts } => Ok(projected_ascent_sup(xi, restarts, trial_seed)),
            SupMethod::Isotonic => Ok(monotone_sup(xi)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailReport {
    pub t: usize,
    pub epsilon: f64,
    pub sigma: f64,
    pub trials: u64,
    /// `√(3/2) · ln t · ε`
    pub threshold: f64,
    pub exceedances: u64,
    pub empirical_freq: f64,
    /// `t · exp(−ε²/2σ²)`, the bound the pass/fail decision uses.
    pub bound_freq: f64,
    /// `exp(−ε²/2σ²)`, reported alongside.
    pub stated_bound_freq: f64,
    /// Binomial standard error at `min(bound_freq, 1)`.
    pub std_error: f64,
    pub mean_sup: f64,
    pub pass: bool,
}

/// Monte Carlo estimate of `P(sup ≥ √(3/2) ln t · ε)` under Gaussian noise.
pub fn monte_carlo_tail(
    t: usize,
    epsilon: f64,
    sigma: f64,
    trials: u64,
    method: SupMethod,
    seed: u64,
) -> Result<TailReport> {
    if trials < 100 {
        return Err(Error::Config(format!("need at least 100 trials, got {trials}")));
    }
    if t == 0 || !(sigma > 0.0) || !(epsilon > 0.0) {
        return Err(Error::Config("need t >= 1, sigma > 0 and epsilon > 0".into()));
    }
    let threshold = 1.5f64.sqrt() * (t as f64).ln() * epsilon;
    let stream = NoiseStream::new(seed);
    let mut xi = vec![0.0; t];
    let mut exceedances = 0u64;
    let mut total = 0.0;
    for trial in 0..trials {
        fill_gaussian(&stream, trial, sigma, &mut xi);
        let sup = method.evaluate(&xi, trial)?;
        total += sup;
        if sup >= threshold {
            exceedances += 1;
        }
    }
    let n = trials as f64;
    let empirical_freq = exceedances as f64 / n;
    let stated = (-epsilon * epsilon / (2.0 * sigma * sigma)).exp();
    let bound_freq = t as f64 * stated;
    let p0 = bound_freq.min(1.0);
    let std_error = (p0 * (1.0 - p0) / n).sqrt();
    Ok(TailReport {
        t,
        epsilon,
        sigma,
        trials,
        threshold,
        exceedances,
        empirical_freq,
        bound_freq,
        stated_bound_freq: stated,
        std_error,
        mean_sup: total / n,
        pass: empirical_freq <= bound_freq + 3.0 * std_error,
    })
}

/// Noise vector of one Monte Carlo trial: `σ·N(0,1)` at cells `(trial, s)`.
pub fn fill_gaussian(stream: &NoiseStream, trial: u64, sigma: f64, out: &mut [f64]) {
    for (s, x) in out.iter_mut().enumerate() {
        *x = sigma * stream.unit_draw(NoiseFamily::Gaussian, trial, s);
    }
}

/// Mean supremum over monotone SE-reachable weights and over unconstrained
/// nonnegative weights, on the same noise draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationPoint {
    pub t: usize,
    pub mean_monotone: f64,
    pub mean_unconstrained: f64,
}

impl SeparationPoint {
    pub fn ratio(&self) -> f64 {
        self.mean_unconstrained / self.mean_monotone
    }
}

pub fn sup_separation(t: usize, arms: usize, sigma: f64, trials: u64, seed: u64) -> Result<SeparationPoint> {
    let stream = NoiseStream::new(seed);
    let mut xi = vec![0.0; t];
    let (mut mono, mut free) = (0.0, 0.0);
    for trial in 0..trials {
        fill_gaussian(&stream, trial, sigma, &mut xi);
        mono += exact_sup_se_reachable(t, arms, &xi, 1.0)?;
        free += unconstrained_sup(&xi);
    }
    let n = trials as f64;
    Ok(SeparationPoint { t, mean_monotone: mono / n, mean_unconstrained: free / n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub rounds_checked: u64,
    /// Rounds in which some checked arm had its mean outside `[LCB, UCB]`.
    pub violating_rounds: u64,
    /// Rounds in which the one-sided good event failed: the best arm's mean
    /// above its UCB, or another arm's mean below its LCB.
    pub good_event_failures: u64,
    pub violation_rate: f64,
}

/// Checks every recorded interval of an elimination run against the true means.
pub fn ci_coverage<F: Scalar>(trace: &RegretTrace, instance: &BanditInstance<F>) -> Result<CoverageReport> {
    let best = instance.best_arm();
    let means: Vec<f64> = instance.means().iter().map(|m| m.to_f64_lossy()).collect();
    let mut checked = 0u64;
    let mut violating = 0u64;
    let mut failures = 0u64;
    let mut saw_records = false;
    for row in &trace.rows {
        let Some(conf) = &row.confidence else { continue };
        saw_records = true;
        checked += 1;
        let outside = conf.arms.iter().any(|&i| means[i] < conf.lower(i) || means[i] > conf.upper(i));
        let fails =
            conf.arms.iter().any(|&i| if i == best { means[i] > conf.upper(i) } else { means[i] < conf.lower(i) });
        violating += outside as u64;
        failures += fails as u64;
    }
    if !saw_records {
        return Err(Error::MissingRecords("trace carries no confidence-interval records".into()));
    }
    Ok(CoverageReport {
        rounds_checked: checked,
        violating_rounds: violating,
        good_event_failures: failures,
        violation_rate: violating as f64 / checked.max(1) as f64,
    })
}

/// `K · Σ_{t=1}^T t^{-2}`: the summed per-round failure budget.
pub fn good_event_budget(arms: usize, horizon: u64) -> f64 {
    let mut acc = KahanSum::<f64>::new();
    for t in (1..=horizon).rev() {
        acc.add(1.0 / (t as f64 * t as f64));
    }
    arms as f64 * acc.value()
}

pub const SPECTRAL_HEADER: [&str; 5] = ["t", "lambda_max", "schur_sum", "bound", "holds"];
pub const TAIL_HEADER: [&str; 7] = ["t", "epsilon", "sigma", "trials", "empirical_freq", "bound_freq", "pass"];

pub fn write_spectral(certs: &[SpectralCertificate], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SPECTRAL_HEADER)?;
    for c in certs {
        w.write_record([
            c.t.to_string(),
            fmt_f64(c.lambda_max),
            fmt_f64(c.schur_sum),
            fmt_f64(c.bound),
            c.holds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tail(reports: &[TailReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TAIL_HEADER)?;
    for r in reports {
        w.write_record([
            r.t.to_string(),
            fmt_f64(r.epsilon),
            fmt_f64(r.sigma),
            r.trials.to_string(),
            fmt_f64(r.empirical_freq),
            fmt_f64(r.bound_freq),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
