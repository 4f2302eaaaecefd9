//! Optimal partitioning with optional PELT or dual-based pruning.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dual::{
    exact_max_1d, maximize, prune_margin, random_decision, DecisionData, DualEvalPlan, Scalar1d,
    Strategy,
};
use crate::dual::closed::{gauss_closed_unchecked, meanvar_closed_unchecked};
use crate::dual::quadratic::{regression_gap_max, regression_gap_random};
use crate::error::{Error, Result};
use crate::exp_family::{ModelFamily, ModelId};
use crate::series::Series;
use crate::stat_store::StatStore;

/// Pruning rule applied after each step of the recursion.
#[derive(Debug, Clone, PartialEq)]
pub enum Pruning {
    /// Plain optimal partitioning.
    None,
    /// Discard `s` when `Q_s + c(y_st) > Q_t`.
    Pelt,
    /// Dual-based tests with the given evaluation plan.
    Dust(DualEvalPlan),
}

impl Pruning {
    pub fn name(&self) -> String {
        match self {
            Pruning::None => "op".into(),
            Pruning::Pelt => "pelt".into(),
            Pruning::Dust(plan) => format!("dust-{}", plan.strategy),
        }
    }
}

/// Run settings that are not part of the model or the pruning rule.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Initial cost `Q_0`; 0 when unset.
    pub q0: Option<f64>,
    /// Overrides the plan seed for random strategies and random constraints.
    pub seed: Option<u64>,
}

/// Output of a segmentation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    /// Right ends of the segments, strictly increasing and ending at `n`.
    pub changepoints: Vec<usize>,
    /// `Q_n`.
    pub global_cost: f64,
    /// `Q_0, …, Q_n`.
    pub q_values: Vec<f64>,
    /// `ŝ_t` for `t = 1..=n`; entry 0 is unused.
    pub last_change: Vec<usize>,
    /// Number of candidates entering the minimisation at `t`; entry 0 is 0.
    pub candidate_trace: Vec<usize>,
    /// Seconds spent in the recursion.
    pub wall_time: f64,
}

impl SegmentationResult {
    /// Candidates left when reaching `t = n`.
    pub fn remaining(&self) -> usize {
        self.candidate_trace.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Alive,
    /// Pruned, but kept in the minimisation until the segment starting at
    /// the dominating index stops being degenerate.
    Pending(usize),
    Dead,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    idx: usize,
    state: State,
    /// `Q_s + c(y_st)` at the current step.
    value: f64,
}

fn validate(model: &ModelFamily, beta: f64, pruning: &Pruning) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Config(format!("penalty must be positive and finite, got {beta}")));
    }
    let Pruning::Dust(plan) = pruning else {
        return Ok(());
    };
    let id = model.id();
    let q = plan.constraints;
    if q == 0 || q > model.stat_dim() {
        return Err(Error::Config(format!(
            "{q} constraint(s) requested, model {id} allows 1 to {}",
            model.stat_dim()
        )));
    }
    let ok = match plan.strategy {
        Strategy::Exact1d => id.is_scalar() && model.stat_dim() == 1 && q == 1,
        Strategy::GaussClosed => id == ModelId::Gauss && q == 1,
        Strategy::MeanVarClosed => id == ModelId::MeanVar && model.columns() == 1,
        Strategy::Zero | Strategy::Random | Strategy::QuasiNewton => true,
    };
    let ok = ok
        && (id != ModelId::QuadraticRegression
            || matches!(plan.strategy, Strategy::Zero | Strategy::Random | Strategy::QuasiNewton) && q == 1);
    if !ok {
        return Err(Error::Config(format!(
            "strategy {} with {q} constraint(s) is not available for model {id} with {} column(s)",
            plan.strategy,
            model.columns()
        )));
    }
    Ok(())
}

/// PELT rule: `s` is discarded at `t` when `Q_s + c(y_st) + β > Q_t + β`.
pub fn pelt_test(model: &ModelFamily, store: &StatStore, s: usize, t: usize, beta: f64) -> bool {
    let mut buf = vec![0.0; store.d()];
    store.mean_into(s, t, &mut buf);
    let cost = model.segment_cost_min_unchecked(&buf, (t - s) as f64);
    let level = store.q_unchecked(t) + beta;
    let gap = store.q_unchecked(s) + cost + beta - level;
    cost.is_finite() && gap > prune_margin(level)
}

/// Runs the recursion on `series`. Every pruning rule returns the same
/// `Q_n` and change points as plain optimal partitioning.
pub fn run(
    model: &ModelFamily,
    series: &Series,
    beta: f64,
    pruning: &Pruning,
    opts: &RunOptions,
) -> Result<SegmentationResult> {
    validate(model, beta, pruning)?;
    let n = series.len();
    if n == 0 {
        return Err(Error::Config("cannot segment an empty series".into()));
    }
    let stats = model.prepare(series)?;
    let mut store = StatStore::new(model.stat_dim(), &stats)?;
    let start = Instant::now();
    let mut engine = Engine::new(model, beta, pruning, opts);
    let q0 = opts.q0.unwrap_or(0.0);
    if !q0.is_finite() {
        return Err(Error::Config(format!("initial cost must be finite, got {q0}")));
    }
    store.push_q(q0);
    let mut last_change = vec![0usize; n + 1];
    let mut trace = vec![0usize; n + 1];
    for t in 1..=n {
        let (qt, arg, live) = engine.minimise(&store, t);
        store.push_q(qt);
        last_change[t] = arg;
        trace[t] = live;
        engine.prune(&store, t);
        engine.admit(&store, t);
    }
    let wall_time = start.elapsed().as_secs_f64();
    let global_cost = store.q_unchecked(n);
    if !global_cost.is_finite() {
        return Err(Error::Infeasible(n));
    }
    let changepoints = backtrack(&last_change)?;
    log::debug!(
        "{} run on n = {n}: Q_n = {global_cost}, {} candidate(s) left",
        pruning.name(),
        trace[n]
    );
    Ok(SegmentationResult {
        changepoints,
        global_cost,
        q_values: store.q_values().to_vec(),
        last_change,
        candidate_trace: trace,
        wall_time,
    })
}

struct Engine<'a> {
    model: &'a ModelFamily,
    beta: f64,
    pruning: &'a Pruning,
    cands: Vec<Candidate>,
    dead: usize,
    buf: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'a> Engine<'a> {
    fn new(model: &'a ModelFamily, beta: f64, pruning: &'a Pruning, opts: &RunOptions) -> Self {
        let seed = match pruning {
            Pruning::Dust(plan) => opts.seed.unwrap_or(plan.rng_seed),
            _ => opts.seed.unwrap_or(0),
        };
        Engine {
            model,
            beta,
            pruning,
            cands: vec![Candidate {
                idx: 0,
                state: State::Alive,
                value: f64::INFINITY,
            }],
            dead: 0,
            buf: vec![0.0; model.stat_dim()],
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn segment_cost(&mut self, store: &StatStore, s: usize, t: usize) -> f64 {
        store.mean_into(s, t, &mut self.buf);
        let c = self.model.segment_cost_min_unchecked(&self.buf, (t - s) as f64);
        if c.is_nan() {
            f64::INFINITY
        } else {
            c
        }
    }

    /// Computes `Q_t`, its argmin (smallest index on ties) and the number of
    /// candidates taking part.
    fn minimise(&mut self, store: &StatStore, t: usize) -> (f64, usize, usize) {
        let mut best = f64::INFINITY;
        let mut arg = None;
        let mut live = 0;
        for k in 0..self.cands.len() {
            let c = self.cands[k];
            if c.state == State::Dead {
                continue;
            }
            live += 1;
            let cost = self.segment_cost(store, c.idx, t);
            let v = store.q_unchecked(c.idx) + cost;
            self.cands[k].value = v;
            if v + self.beta < best {
                best = v + self.beta;
                arg = Some(c.idx);
            }
        }
        let arg = arg.unwrap_or_else(|| {
            self.cands
                .iter()
                .find(|c| c.state != State::Dead)
                .map_or(t - 1, |c| c.idx)
        });
        (best, arg, live)
    }

    fn prune(&mut self, store: &StatStore, t: usize) {
        let degenerate_ok = !self.model.may_degenerate();
        // release pending indices whose dominating segment is now proper
        for k in 0..self.cands.len() {
            if let State::Pending(dom) = self.cands[k].state {
                if dom < t && self.segment_cost(store, dom, t).is_finite() {
                    self.cands[k].state = State::Dead;
                    self.dead += 1;
                }
            }
        }
        if matches!(self.pruning, Pruning::None) {
            return;
        }
        let qt = store.q_unchecked(t);
        if !qt.is_finite() {
            return;
        }
        let level = qt + self.beta;
        let margin = prune_margin(level);
        let mut below: Vec<usize> = Vec::new();
        for k in 0..self.cands.len() {
            let c = self.cands[k];
            if c.state != State::Alive {
                continue;
            }
            let pruned = c.value.is_finite() && self.test(store, c, t, level, margin, &below);
            if pruned {
                self.cands[k].state = if degenerate_ok {
                    self.dead += 1;
                    State::Dead
                } else {
                    State::Pending(t)
                };
            } else {
                below.push(c.idx);
            }
        }
        if self.dead * 2 > self.cands.len() {
            self.cands.retain(|c| c.state != State::Dead);
            self.dead = 0;
        }
    }

    /// True when candidate `c` can be discarded at `t`. `below` lists the
    /// surviving indices smaller than `c.idx`, in increasing order.
    fn test(
        &mut self,
        store: &StatStore,
        c: Candidate,
        t: usize,
        level: f64,
        margin: f64,
        below: &[usize],
    ) -> bool {
        let s = c.idx;
        let pelt_gap = c.value + self.beta - level;
        let plan = match self.pruning {
            Pruning::None => return false,
            Pruning::Pelt => return pelt_gap > margin,
            Pruning::Dust(plan) => plan,
        };
        if below.is_empty() {
            return pelt_gap > margin;
        }
        // maximising strategies dominate the value at zero
        if plan.strategy != Strategy::Random && pelt_gap > margin {
            return true;
        }
        let want = plan.constraints.min(below.len());
        let rs: Vec<usize> = if plan.random_constraints {
            let mut pool = below.to_vec();
            let mut picked = Vec::with_capacity(want);
            for _ in 0..want {
                let i = self.rng.random_range(0..pool.len());
                picked.push(pool.swap_remove(i));
            }
            picked
        } else {
            below[below.len() - want..].iter().rev().copied().collect()
        };
        let model = self.model;
        let len = (t - s) as f64;
        let gap = match plan.strategy {
            Strategy::Zero => pelt_gap,
            Strategy::Exact1d => {
                let p = Scalar1d::from_store(store, rs[0], s, t);
                exact_max_1d(model.id(), &p).gap(len)
            }
            Strategy::GaussClosed => gauss_closed_unchecked(store, rs[0], s, t, self.beta) - level,
            Strategy::MeanVarClosed => {
                let data = DecisionData::from_store(store, s, t, &rs);
                let best = meanvar_closed_unchecked(&data);
                data.gap(&best.x[..rs.len()], best.value)
            }
            Strategy::Random if model.id() == ModelId::QuadraticRegression => {
                regression_gap_random(store, rs[0], s, t, self.beta, &mut self.rng)
            }
            Strategy::QuasiNewton if model.id() == ModelId::QuadraticRegression => {
                regression_gap_max(store, rs[0], s, t, self.beta)
            }
            Strategy::Random => {
                let data = DecisionData::from_store(store, s, t, &rs);
                let (x, v) = random_decision(model, &data, &mut self.rng);
                data.gap(&x, v)
            }
            Strategy::QuasiNewton => {
                let data = DecisionData::from_store(store, s, t, &rs);
                let res = maximize(&data, model, plan.qn_max_iters, plan.qn_tol, Some(margin));
                data.gap(&res.x, res.value)
            }
        };
        gap > margin
    }

    /// Adds `t` as a candidate for later steps, unless `Q_t` is infinite.
    fn admit(&mut self, store: &StatStore, t: usize) {
        if store.q_unchecked(t).is_finite() {
            self.cands.push(Candidate {
                idx: t,
                state: State::Alive,
                value: f64::INFINITY,
            });
        }
    }
}

/// Follows `ŝ` back from `n` and returns the right ends of the segments in
/// increasing order.
pub fn backtrack(last_change: &[usize]) -> Result<Vec<usize>> {
    let n = last_change.len().saturating_sub(1);
    let mut out = Vec::new();
    let mut tau = n;
    while tau > 0 {
        out.push(tau);
        let s = last_change[tau];
        if s >= tau {
            return Err(Error::CorruptState(tau));
        }
        tau = s;
    }
    out.reverse();
    Ok(out)
}

/// Penalised cost `Σ (c(y_seg) + β)` of a given segmentation, plus `q0`.
pub fn segmentation_cost(
    model: &ModelFamily,
    series: &Series,
    changepoints: &[usize],
    beta: f64,
    q0: f64,
) -> Result<f64> {
    let stats = model.prepare(series)?;
    let store = StatStore::new(model.stat_dim(), &stats)?;
    let mut total = q0;
    let mut prev = 0;
    for &cp in changepoints {
        if cp <= prev || cp > store.n() {
            return Err(Error::Index(format!("invalid change point {cp} after {prev}")));
        }
        let mean = store.mean_stat(prev, cp)?;
        total += model.segment_cost_min_unchecked(&mean, (cp - prev) as f64) + beta;
        prev = cp;
    }
    if prev != store.n() {
        return Err(Error::Index(format!(
            "last change point {prev} differs from n = {}",
            store.n()
        )));
    }
    Ok(total)
}
