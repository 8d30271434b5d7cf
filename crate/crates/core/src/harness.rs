//! Simulation runs, replications, parameter sweeps and CSV output.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{derive_seed, regret_increment, sample_rewards_into, BanditInstance, InstanceSpec, NoiseStream};
use crate::error::{Error, Result};
use crate::estimators::{AllocPowers, ArmStatistics};
use crate::policies::{PolicySpec, RoundConfidence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(rename = "T")]
    pub horizon: u64,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one_u64")]
    pub record_every: u64,
}

fn one() -> usize {
    1
}

fn one_u64() -> u64 {
    1
}

/// A full experiment description, read from TOML:
///
/// ```toml
/// [instance]
/// means = [1.0, 0.8, 0.5]
/// b = 0.75
/// sigma = 1.0
/// noise = "gaussian"
///
/// [policy]
/// name = "se"
///
/// [run]
/// T = 10000
/// replications = 20
/// seed = 7
/// record_every = 100
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: InstanceSpec,
    pub policy: PolicySpec,
    pub run: RunSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.horizon < 1 {
            return Err(Error::Config("run.T must be >= 1".into()));
        }
        if self.run.replications < 1 {
            return Err(Error::Config("run.replications must be >= 1".into()));
        }
        if self.run.record_every < 1 {
            return Err(Error::Config("run.record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Seed of replication `rep`: `splitmix(base_seed + rep)`.
    pub fn replication_seed(&self, rep: usize) -> u64 {
        derive_seed(self.run.seed, rep as u64)
    }
}

/// What to keep from each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recording {
    /// Keep every `every`-th round (and always the last).
    pub every: u64,
    /// Also keep the policy's confidence intervals on kept rounds.
    pub confidence: bool,
}

impl Recording {
    pub fn every(every: u64) -> Self {
        Self { every: every.max(1), confidence: false }
    }

    /// Only the final round.
    pub fn final_only(horizon: u64) -> Self {
        Self::every(horizon)
    }

    pub fn with_confidence(mut self) -> Self {
        self.confidence = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: u64,
    pub cumulative_regret: f64,
    /// Per-arm `S = Σ A`.
    pub sum_a: Vec<f64>,
    /// Per-arm `L = Σ A^{2b}` (true `b`).
    pub sum_a2b: Vec<f64>,
    /// Per-arm `B = Σ A^{2−2b}` (true `b`).
    pub sum_a2m2b: Vec<f64>,
    pub status: usize,
    pub ci_width: Option<f64>,
    pub confidence: Option<RoundConfidence<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretTrace {
    pub rows: Vec<TraceRow>,
}

impl RegretTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Cumulative regret at round `t`, if that round was recorded.
    pub fn regret_at(&self, t: u64) -> Option<f64> {
        self.rows.binary_search_by_key(&t, |r| r.t).ok().map(|i| self.rows[i].cumulative_regret)
    }

    /// Fixed column order: `t, cumulative_regret, S_1..S_K, L_1..L_K, B_1..B_K, status, ci_width`.
    pub fn header(k: usize) -> Vec<String> {
        let mut h = vec!["t".to_string(), "cumulative_regret".to_string()];
        for prefix in ["S", "L", "B"] {
            h.extend((1..=k).map(|i| format!("{prefix}_{i}")));
        }
        h.push("status".into());
        h.push("ci_width".into());
        h
    }

    pub fn write_csv(&self, k: usize, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(Self::header(k))?;
        for r in &self.rows {
            let mut rec = vec![r.t.to_string(), fmt_f64(r.cumulative_regret)];
            for col in [&r.sum_a, &r.sum_a2b, &r.sum_a2m2b] {
                rec.extend(col.iter().map(|&v| fmt_f64(v)));
            }
            rec.push(r.status.to_string());
            rec.push(r.ci_width.map(fmt_f64).unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Floats in output files: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub index: usize,
    pub seed: u64,
    pub horizon: u64,
    pub final_regret: f64,
    /// Total resource given to suboptimal arms over the run.
    pub suboptimal_resource: f64,
    pub final_status: usize,
    pub trace: RegretTrace,
}

/// One simulated run of `policy` on `instance`.
pub fn simulate(
    instance: &BanditInstance<f64>,
    policy: &PolicySpec,
    horizon: u64,
    seed: u64,
    recording: Recording,
) -> Result<Replication> {
    let mut pol = policy.build(instance, horizon)?;
    let k = instance.num_arms();
    let b = instance.b();
    let stream = NoiseStream::new(seed);
    let mut stats = vec![ArmStatistics::<f64>::new(); k];
    let mut rewards = vec![0.0; k];
    let mut regret = 0.0;
    let mut rows = Vec::new();
    for t in 1..=horizon {
        let alloc = pol.decide(t);
        sample_rewards_into(instance, &alloc, &stream, t, &mut rewards);
        let mut cached: Option<AllocPowers<f64>> = None;
        for (i, s) in stats.iter_mut().enumerate() {
            let a = alloc.get(i);
            let p = match cached {
                Some(p) if p.a == a => p,
                _ => *cached.insert(AllocPowers::new(a, b)),
            };
            s.update_with(&p, rewards[i]);
        }
        pol.observe(t, &alloc, &rewards);
        regret += regret_increment(instance, &alloc);
        if t % recording.every == 0 || t == horizon {
            let conf = pol.confidence().cloned();
            rows.push(TraceRow {
                t,
                cumulative_regret: regret,
                sum_a: stats.iter().map(|s| s.sum_a).collect(),
                sum_a2b: stats.iter().map(|s| s.sum_a2b).collect(),
                sum_a2m2b: stats.iter().map(|s| s.sum_a2m2b).collect(),
                status: pol.status(),
                ci_width: conf.as_ref().map(|c| c.width),
                confidence: if recording.confidence { conf } else { None },
            });
        }
    }
    let best = instance.best_arm();
    let suboptimal_resource =
        stats.iter().enumerate().filter(|&(i, _)| instance.gap(i) > 0.0 && i != best).map(|(_, s)| s.sum_a).sum();
    Ok(Replication {
        index: 0,
        seed,
        horizon,
        final_regret: regret,
        suboptimal_resource,
        final_status: pol.status(),
        trace: RegretTrace { rows },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub replications: usize,
    pub mean_regret: f64,
    pub std_regret: f64,
    pub mean_suboptimal_resource: f64,
}

impl Summary {
    pub fn of(reps: &[Replication]) -> Self {
        let n = reps.len() as f64;
        let mean = reps.iter().map(|r| r.final_regret).sum::<f64>() / n;
        let var = if reps.len() > 1 {
            reps.iter().map(|r| (r.final_regret - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            replications: reps.len(),
            mean_regret: mean,
            std_regret: var.sqrt(),
            mean_suboptimal_resource: reps.iter().map(|r| r.suboptimal_resource).sum::<f64>() / n,
        }
    }

    /// Standard error of the mean regret.
    pub fn sem(&self) -> f64 {
        self.std_regret / (self.replications as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub num_arms: usize,
    pub replications: Vec<Replication>,
    pub summary: Summary,
}

/// Seeds for `replications` runs, rejecting collisions.
pub fn replication_seeds(base: u64, replications: usize) -> Result<Vec<u64>> {
    let mut seen = HashMap::with_capacity(replications);
    (0..replications)
        .map(|rep| {
            let seed = derive_seed(base, rep as u64);
            if let Some(&prev) = seen.get(&seed) {
                return Err(Error::SeedCollision(prev, rep));
            }
            seen.insert(seed, rep);
            Ok(seed)
        })
        .collect()
}

/// Runs all replications of `cfg` (in parallel); results are in replication order.
pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    cfg.validate()?;
    let instance = cfg.instance.build()?;
    run_instance(
        &instance,
        &cfg.policy,
        cfg.run.horizon,
        cfg.run.seed,
        cfg.run.replications,
        Recording::every(cfg.run.record_every),
    )
}

pub fn run_instance(
    instance: &BanditInstance<f64>,
    policy: &PolicySpec,
    horizon: u64,
    base_seed: u64,
    replications: usize,
    recording: Recording,
) -> Result<RunResult> {
    if replications < 1 || horizon < 1 {
        return Err(Error::Config("need T >= 1 and replications >= 1".into()));
    }
    // Fail fast on incompatible policy/instance pairs.
    policy.build(instance, horizon)?;
    let seeds = replication_seeds(base_seed, replications)?;
    let reps = seeds
        .par_iter()
        .enumerate()
        .map(|(index, &seed)| simulate(instance, policy, horizon, seed, recording).map(|r| Replication { index, ..r }))
        .collect::<Result<Vec<_>>>()?;
    let summary = Summary::of(&reps);
    Ok(RunResult { num_arms: instance.num_arms(), replications: reps, summary })
}

pub const SUMMARY_HEADER: [&str; 6] =
    ["replication", "seed", "T", "cumulative_regret", "suboptimal_resource", "final_status"];

/// Writes `trace_<rep>.csv` for every replication and `summary.csv`.
pub fn write_run(result: &RunResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for rep in &result.replications {
        rep.trace.write_csv(result.num_arms, &dir.join(format!("trace_{}.csv", rep.index)))?;
    }
    let mut w = csv::Writer::from_path(dir.join("summary.csv"))?;
    w.write_record(SUMMARY_HEADER)?;
    for r in &result.replications {
        w.write_record([
            r.index.to_string(),
            r.seed.to_string(),
            r.horizon.to_string(),
            fmt_f64(r.final_regret),
            fmt_f64(r.suboptimal_resource),
            r.final_status.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Horizon,
    Arms,
    NoiseOrder,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" | "t" | "horizon" => Ok(SweepAxis::Horizon),
            "K" | "k" | "arms" => Ok(SweepAxis::Arms),
            "b" => Ok(SweepAxis::NoiseOrder),
            other => Err(Error::Config(format!("unknown sweep axis `{other}` (expected T, K or b)"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepAxis::Horizon => "T",
            SweepAxis::Arms => "K",
            SweepAxis::NoiseOrder => "b",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub arms: usize,
    pub horizon: u64,
    pub b: f64,
    pub summary: Summary,
}

impl SweepAxis {
    /// Applies one sweep value to a copy of `base`.
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut cfg = base.clone();
        match self {
            SweepAxis::Horizon => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("T must be a positive integer, got {value}")));
                }
                cfg.run.horizon = value as u64;
            }
            SweepAxis::Arms => {
                if value < 2.0 || value.fract() != 0.0 {
                    return Err(Error::Config(format!("K must be an integer >= 2, got {value}")));
                }
                if cfg.instance.arms.is_none() {
                    return Err(Error::Config("a K sweep needs the arms/gap instance construction".into()));
                }
                cfg.instance.arms = Some(value as usize);
            }
            SweepAxis::NoiseOrder => cfg.instance.b = value,
        }
        Ok(cfg)
    }
}

/// One summary row per value; every cell uses the same base seed.
pub fn sweep(base: &RunConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.len() < 2 {
        return Err(Error::Config("a sweep needs at least 2 values".into()));
    }
    if values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("sweep values must be strictly increasing".into()));
    }
    values
        .iter()
        .map(|&value| {
            let cfg = axis.apply(base, value)?;
            let instance = cfg.instance.build()?;
            let result = run_instance(
                &instance,
                &cfg.policy,
                cfg.run.horizon,
                cfg.run.seed,
                cfg.run.replications,
                Recording::final_only(cfg.run.horizon),
            )?;
            Ok(SweepRow {
                axis,
                value,
                arms: instance.num_arms(),
                horizon: cfg.run.horizon,
                b: instance.b(),
                summary: result.summary,
            })
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 9] =
    ["axis", "value", "K", "T", "b", "replications", "mean_regret", "std_regret", "mean_suboptimal_resource"];

pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.axis.to_string(),
            fmt_f64(r.value),
            r.arms.to_string(),
            r.horizon.to_string(),
            fmt_f64(r.b),
            r.summary.replications.to_string(),
            fmt_f64(r.summary.mean_regret),
            fmt_f64(r.summary.std_regret),
            fmt_f64(r.summary.mean_suboptimal_resource),
        ])?;
    }
    w.flush()?;
    Ok(())
}
