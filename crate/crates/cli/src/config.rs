//! Penalty specifications and pruning-rule names.

use std::fmt;
use std::str::FromStr;

use dust_core::dual::{DualEvalPlan, Strategy};
use dust_core::{ModelFamily, ModelId, Pruning};

use crate::error::{CliError, CliResult};

/// Penalty given either as an absolute value or as a multiple of `log n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltySpec {
    /// `abs:β`
    Abs(f64),
    /// `log:a`, resolved to `a·log n` (times the model scale when requested).
    Log(f64),
}

impl FromStr for PenaltySpec {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| CliError::Config(format!("penalty '{s}' should look like abs:3.5 or log:2")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("penalty value '{value}' is not a number")))?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("penalty value '{value}' is not finite")));
        }
        match kind.trim() {
            "abs" => Ok(PenaltySpec::Abs(v)),
            "log" => Ok(PenaltySpec::Log(v)),
            other => Err(CliError::Config(format!("unknown penalty kind '{other}', expected abs or log"))),
        }
    }
}

impl fmt::Display for PenaltySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltySpec::Abs(v) => write!(f, "abs:{v}"),
            PenaltySpec::Log(v) => write!(f, "log:{v}"),
        }
    }
}

/// Resolves a penalty for a series of length `n`. Absolute values pass
/// through unchanged; `log:a` gives `a·log n`, multiplied by the model's
/// penalty scale when `scale_table` is set.
pub fn resolve_penalty(spec: PenaltySpec, model: ModelId, n: f64, scale_table: bool) -> CliResult<f64> {
    if !(n >= 2.0) {
        return Err(CliError::Config(format!("penalty needs n >= 2, got {n}")));
    }
    let beta = match spec {
        PenaltySpec::Abs(v) => v,
        PenaltySpec::Log(a) => {
            let scale = if scale_table { model.penalty_scale() } else { 1.0 };
            a * scale * n.ln()
        }
    };
    if !(beta.is_finite() && beta > 0.0) {
        return Err(CliError::Config(format!("penalty {spec} resolves to {beta}, which is not positive")));
    }
    Ok(beta)
}

/// `n` points spaced regularly on the log scale between `lo` and `hi`,
/// rounded and deduplicated.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 || lo == hi {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Parses a length grid: either a comma-separated list `100,200,400` or
/// `lo:hi:count` for a log-regular grid.
pub fn parse_lengths(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Config(format!("length grid '{s}' should be a list like 100,200 or lo:hi:count"));
    let mut out: Vec<usize> = if let Some((lo, rest)) = s.split_once(':') {
        let (hi, count) = rest.split_once(':').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if !(lo >= 2.0 && hi >= lo && count >= 1) {
            return Err(bad());
        }
        log_grid(lo, hi, count).into_iter().map(|v| v.round() as usize).collect()
    } else {
        s.split(',')
            .map(|v| v.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    out.dedup();
    if out.is_empty() || out.iter().any(|&n| n < 2) {
        return Err(bad());
    }
    Ok(out)
}

/// Parses `lo:hi:count` into log-spaced `log:a` penalties.
pub fn parse_penalty_sweep(s: &str) -> CliResult<Vec<PenaltySpec>> {
    let bad = || CliError::Config(format!("penalty sweep '{s}' should look like lo:hi:count"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo && count >= 1) {
        return Err(bad());
    }
    Ok(log_grid(lo, hi, count).into_iter().map(PenaltySpec::Log).collect())
}

/// Pruning rule names accepted on the command line: `op`, `pelt`, or one
/// of the dual strategies `exact1d | zero | random | qn | meanvar | gauss`.
#[derive(Debug, Clone, PartialEq)]
pub struct PruningChoice {
    pub name: String,
    pub constraints: usize,
    pub random_constraints: bool,
}

impl PruningChoice {
    pub fn new(name: &str) -> Self {
        PruningChoice {
            name: name.to_string(),
            constraints: 1,
            random_constraints: false,
        }
    }

    pub fn build(&self) -> CliResult<Pruning> {
        match self.name.as_str() {
            "op" => Ok(Pruning::None),
            "pelt" => Ok(Pruning::Pelt),
            other => {
                let strategy: Strategy = other.parse()?;
                let mut plan = DualEvalPlan::new(strategy).with_constraints(self.constraints);
                plan.random_constraints = self.random_constraints;
                Ok(Pruning::Dust(plan))
            }
        }
    }
}

/// Strategy used when none is given: the closed forms where they exist,
/// quasi-Newton otherwise.
pub fn default_strategy(model: &ModelFamily) -> &'static str {
    match model.id() {
        ModelId::MeanVar if model.columns() == 1 => "meanvar",
        id if id.is_scalar() && model.stat_dim() == 1 => "exact1d",
        _ => "qn",
    }
}
