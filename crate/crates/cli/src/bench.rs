//! Benchmark sweeps: simulated series over a grid of lengths, penalties and
//! repetitions, segmented under several pruning rules.

use dust_core::simgen::{simulate, SimSpec};
use dust_core::{run, ModelFamily, Pruning, RunOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{resolve_penalty, PenaltySpec, PruningChoice};
use crate::error::{CliError, CliResult};

/// One segmentation run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub model: String,
    pub n: usize,
    pub penalty: String,
    pub beta: f64,
    pub strategy: String,
    pub seed: u64,
    /// Candidates left at `t = n`.
    pub remaining_candidates: usize,
    pub changepoint_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Order-statistic quantiles of a group of runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub strategy: String,
    pub n: usize,
    pub penalty: String,
    pub runs: usize,
    pub failures: usize,
    /// Quantile levels, matching the order of the value triples.
    pub levels: [f64; 3],
    pub remaining: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<[f64; 3]>,
}

/// Least-squares slope of `log(remaining)` against `log n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    pub strategy: String,
    pub penalty: String,
    pub slope: f64,
    pub points: usize,
}

pub const LEVELS: [f64; 3] = [0.025, 0.5, 0.975];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub model: ModelFamily,
    pub lengths: Vec<usize>,
    pub penalties: Vec<PenaltySpec>,
    pub scale_table: bool,
    pub strategies: Vec<PruningChoice>,
    pub repetitions: usize,
    /// Repetition `k` simulates with seed `seed + k`.
    pub seed: u64,
    /// Length of the simulated segments; `None` for series without change.
    pub segment_len: Option<usize>,
    pub params: Option<[f64; 2]>,
    pub jobs: usize,
    pub timing: bool,
}

impl BenchConfig {
    pub fn new(model: ModelFamily, lengths: Vec<usize>, strategies: Vec<PruningChoice>, repetitions: usize) -> Self {
        BenchConfig {
            model,
            lengths,
            penalties: vec![PenaltySpec::Log(2.0)],
            scale_table: true,
            strategies,
            repetitions,
            seed: 0,
            segment_len: None,
            params: None,
            jobs: 1,
            timing: true,
        }
    }
}

struct Job {
    n: usize,
    penalty: PenaltySpec,
    rep: usize,
}

/// Runs the sweep and returns one record per (n, penalty, repetition,
/// strategy), in that nesting order. Configuration problems are reported
/// before anything runs; failures of single runs are recorded and the sweep
/// continues.
pub fn run_sweep(cfg: &BenchConfig) -> CliResult<Vec<BenchRecord>> {
    if cfg.repetitions == 0 {
        return Err(CliError::Config("repetitions must be at least 1".into()));
    }
    if cfg.lengths.is_empty() || cfg.strategies.is_empty() || cfg.penalties.is_empty() {
        return Err(CliError::Config("empty length, penalty or strategy list".into()));
    }
    let rules: Vec<Pruning> = cfg.strategies.iter().map(|c| c.build()).collect::<CliResult<_>>()?;
    for &n in &cfg.lengths {
        for &p in &cfg.penalties {
            resolve_penalty(p, cfg.model.id(), n as f64, cfg.scale_table)?;
        }
    }
    let mut jobs = Vec::new();
    for &n in &cfg.lengths {
        for &penalty in &cfg.penalties {
            for rep in 0..cfg.repetitions {
                jobs.push(Job { n, penalty, rep });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let nested: Vec<Vec<BenchRecord>> = pool.install(|| jobs.par_iter().map(|job| run_job(cfg, &rules, job)).collect());
    Ok(nested.into_iter().flatten().collect())
}

fn run_job(cfg: &BenchConfig, rules: &[Pruning], job: &Job) -> Vec<BenchRecord> {
    let seed = cfg.seed.wrapping_add(job.rep as u64);
    let beta = resolve_penalty(job.penalty, cfg.model.id(), job.n as f64, cfg.scale_table).unwrap_or(f64::NAN);
    let mut spec = SimSpec::new(cfg.model.id(), job.n, seed).with_dim(cfg.model.columns());
    spec.trials = cfg.model.trials().round() as u32;
    if let Some(k) = cfg.segment_len {
        spec = spec.with_segment_len(k);
    }
    if let Some(p) = cfg.params {
        spec = spec.with_params(p);
    }
    let data = simulate(&spec);
    rules
        .iter()
        .map(|rule| {
            let mut rec = BenchRecord {
                model: cfg.model.id().to_string(),
                n: job.n,
                penalty: job.penalty.to_string(),
                beta,
                strategy: rule.name(),
                seed,
                remaining_candidates: 0,
                changepoint_count: 0,
                wall_time: None,
                error: None,
            };
            let opts = RunOptions {
                q0: None,
                seed: Some(seed),
            };
            match data.as_ref().map_err(|e| e.clone()).and_then(|s| run(&cfg.model, s, beta, rule, &opts)) {
                Ok(res) => {
                    rec.remaining_candidates = res.remaining();
                    rec.changepoint_count = res.changepoints.len();
                    rec.wall_time = cfg.timing.then_some(res.wall_time);
                }
                Err(e) => {
                    log::warn!("run failed (n = {}, seed = {seed}, {}): {e}", job.n, rule.name());
                    rec.error = Some(e.to_string());
                }
            }
            rec
        })
        .collect()
}

/// Order statistic at level `p` of sorted values: the smallest value whose
/// empirical distribution function reaches `p`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let m = sorted.len();
    let k = ((p * m as f64).ceil() as usize).clamp(1, m);
    sorted[k - 1]
}

fn triple(mut v: Vec<f64>) -> [f64; 3] {
    v.sort_by(|a, b| a.total_cmp(b));
    LEVELS.map(|p| quantile(&v, p))
}

/// Quantiles per (strategy, n, penalty), in order of first appearance.
pub fn summarise(records: &[BenchRecord]) -> Vec<SummaryRecord> {
    let mut keys: Vec<(String, usize, String)> = Vec::new();
    for r in records {
        let key = (r.strategy.clone(), r.n, r.penalty.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .filter_map(|(strategy, n, penalty)| {
            let group: Vec<&BenchRecord> = records
                .iter()
                .filter(|r| r.strategy == strategy && r.n == n && r.penalty == penalty)
                .collect();
            let ok: Vec<&&BenchRecord> = group.iter().filter(|r| r.error.is_none()).collect();
            if ok.is_empty() {
                return None;
            }
            let remaining = triple(ok.iter().map(|r| r.remaining_candidates as f64).collect());
            let times: Option<Vec<f64>> = ok.iter().map(|r| r.wall_time).collect();
            Some(SummaryRecord {
                strategy,
                n,
                penalty,
                runs: group.len(),
                failures: group.len() - ok.len(),
                levels: LEVELS,
                remaining,
                wall_time: times.map(triple),
            })
        })
        .collect()
}

/// Ordinary least-squares slope of `y` on `x`. `None` with fewer than two
/// distinct `x` values.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    let m = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Log-log slope of remaining candidates against `n`, per (strategy, penalty).
pub fn loglog_slopes(records: &[BenchRecord]) -> Vec<SlopeRecord> {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in records {
        let key = (r.strategy.clone(), r.penalty.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .filter_map(|(strategy, penalty)| {
            let pts: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.strategy == strategy && r.penalty == penalty && r.error.is_none())
                .filter(|r| r.remaining_candidates > 0)
                .map(|r| ((r.n as f64).ln(), (r.remaining_candidates as f64).ln()))
                .collect();
            let slope = ols_slope(&pts)?;
            Some(SlopeRecord {
                strategy,
                penalty,
                slope,
                points: pts.len(),
            })
        })
        .collect()
}
