//! One-constraint dual and its closed-form maximum for scalar statistics.

use crate::error::{Error, Result};
use crate::exp_family::{interval_max_step, ModelFamily, ModelId};
use crate::stat_store::{psi, StatStore};

use super::{prune_margin, DualDomain};

fn check_order(r: usize, s: usize, t: usize, n: usize) -> Result<()> {
    if !(r < s && s < t && t <= n) {
        return Err(Error::Index(format!(
            "need r < s < t <= {n}, got ({r}, {s}, {t})"
        )));
    }
    Ok(())
}

fn require_q(store: &StatStore, idx: &[usize]) -> Result<()> {
    for &i in idx {
        store.q(i)?;
    }
    Ok(())
}

/// Largest multiplier keeping `m(μ)` inside the mean domain.
pub fn mu_max_1c(model: &ModelFamily, store: &StatStore, r: usize, s: usize, t: usize) -> Result<DualDomain> {
    check_order(r, s, t, store.n())?;
    let sigma = store.mean_stat(s, t)?;
    let dir = store.delta_mean(r, s, t)?;
    Ok(DualDomain::from_x_max(model.max_step(&sigma, &dir)))
}

/// One-constraint dual
/// `D(μ) = (t−s)(−(1−μ)D*(m(μ)) + μQ̄_rs) + Q_s + β`,
/// `m(μ) = (S̄_st − μS̄_rs)/(1−μ)`.
pub fn dual_1c(
    model: &ModelFamily,
    store: &StatStore,
    r: usize,
    s: usize,
    t: usize,
    mu: f64,
    beta: f64,
) -> Result<f64> {
    check_order(r, s, t, store.n())?;
    require_q(store, &[r, s])?;
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::Domain {
            coord: 0,
            value: mu,
            lower: 0.0,
            upper: 1.0,
        });
    }
    let st = store.mean_stat(s, t)?;
    let rs = store.mean_stat(r, s)?;
    let m: Vec<f64> = st
        .iter()
        .zip(&rs)
        .map(|(a, b)| (a - mu * b) / (1.0 - mu))
        .collect();
    let dom = mu_max_1c(model, store, r, s, t)?;
    if mu > 0.0 && mu >= dom.mu_max {
        return Err(Error::Domain {
            coord: 0,
            value: mu,
            lower: 0.0,
            upper: dom.mu_max,
        });
    }
    let dstar = model.dstar_closure(&m)?;
    let len = (t - s) as f64;
    let lin = if mu > 0.0 { mu * store.q_mean(r, s)? } else { 0.0 };
    Ok(len * (-(1.0 - mu) * dstar + lin) + store.q(s)? + beta)
}

/// Decision function with one constraint, `𝔻(x) = −D*(S̄_st + xΔS̄_rst) − (Q̄_st + xΔQ̄_rst)`.
///
/// `x = 0` is always accepted, even when `S̄_st` sits on the domain boundary.
pub fn decision_1d(
    model: &ModelFamily,
    store: &StatStore,
    r: usize,
    s: usize,
    t: usize,
    x: f64,
) -> Result<f64> {
    let sel = super::ConstraintSelection::new(s, t, vec![r])?;
    super::decision_multi(model, store, &sel, &[x])
}

/// Scalar ingredients of the one-constraint decision function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scalar1d {
    pub sigma1: f64,
    pub delta_s: f64,
    pub qbar_st: f64,
    pub delta_q: f64,
}

impl Scalar1d {
    /// Reads the ingredients for `(r, s, t)` from a `d = 1` store; the
    /// indices and computed costs are not checked.
    #[inline]
    pub fn from_store(store: &StatStore, r: usize, s: usize, t: usize) -> Self {
        let p = psi(r, s);
        let sigma1 = store.mean1(s, t);
        let qbar_st = store.q_mean_unchecked(s, t);
        Scalar1d {
            sigma1,
            delta_s: p * (sigma1 - store.mean1(r, s)),
            qbar_st,
            delta_q: p * (qbar_st - store.q_mean_unchecked(r, s)),
        }
    }

    /// `𝔻(x)` using limit values of `D*` on the boundary.
    #[inline]
    pub fn value(&self, id: ModelId, x: f64) -> f64 {
        -id.dstar1(self.sigma1 + x * self.delta_s) - self.qbar_st - x * self.delta_q
    }

    #[inline]
    pub fn x_max(&self, id: ModelId) -> f64 {
        interval_max_step(id.interval(), self.sigma1, self.delta_s)
    }
}

/// Supremum of a one-constraint decision function and where it is reached.
///
/// `x` may be `+∞` (with `value = +∞`) when the function grows without
/// bound, or equal to `x_max` when the supremum is a boundary limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactMax {
    pub x: f64,
    pub value: f64,
}

impl ExactMax {
    /// Dual gap `D − (Q_t + β)` for a segment of length `len`.
    #[inline]
    pub fn gap(&self, len: f64) -> f64 {
        if self.value.is_infinite() {
            self.value
        } else {
            len * self.value / (1.0 + self.x)
        }
    }
}

/// Closed-form supremum of `𝔻` over `[0, x_max)` for a scalar family with
/// the constraint index below `s`.
pub fn exact_max_1d(id: ModelId, p: &Scalar1d) -> ExactMax {
    let at_zero = ExactMax {
        x: 0.0,
        value: p.value(id, 0.0),
    };
    if !at_zero.value.is_finite() {
        // degenerate last segment: no finite dual value anywhere
        return at_zero;
    }
    let x_max = p.x_max(id);
    if x_max == 0.0 {
        return at_zero;
    }
    if p.delta_s == 0.0 {
        // affine in x with slope −ΔQ̄ on an unbounded range
        return if p.delta_q < 0.0 {
            ExactMax {
                x: f64::INFINITY,
                value: f64::INFINITY,
            }
        } else {
            at_zero
        };
    }
    let boundary = || {
        if x_max.is_infinite() {
            ExactMax {
                x: f64::INFINITY,
                value: f64::INFINITY,
            }
        } else {
            let iv = id.interval();
            let bound = if p.delta_s < 0.0 { iv.lower } else { iv.upper };
            let v = -id.dstar1(bound) - p.qbar_st - x_max * p.delta_q;
            ExactMax { x: x_max, value: v }
        }
    };
    let theta = -p.delta_q / p.delta_s;
    let best = if id.natural_contains1(theta) {
        let x_star = (id.grad_a1(theta) - p.sigma1) / p.delta_s;
        if x_star <= 0.0 {
            at_zero
        } else if x_star < x_max {
            // σ(x*) = ∇A(θ*), so 𝔻(x*) = A(θ*) − θ*σ₁ − Q̄_st
            let v = id.log_partition1(theta) - theta * p.sigma1 - p.qbar_st;
            ExactMax { x: x_star, value: v }
        } else {
            boundary()
        }
    } else {
        // no interior critical point: 𝔻 is monotone, follow its slope at 0
        let slope = -p.delta_s * id.grad_a_inv1(p.sigma1) - p.delta_q;
        if slope > 0.0 {
            boundary()
        } else {
            at_zero
        }
    };
    if best.value >= at_zero.value {
        best
    } else {
        at_zero
    }
}

/// Pruning test with one constraint `r < s`, using the closed-form maximum
/// of the decision function. Requires a scalar family with one column.
pub fn exact_test_1d(
    model: &ModelFamily,
    store: &StatStore,
    r: usize,
    s: usize,
    t: usize,
    beta: f64,
) -> Result<bool> {
    if !(model.id().is_scalar() && model.stat_dim() == 1) {
        return Err(Error::Config(
            "exact1d needs a scalar model with a one-dimensional statistic".into(),
        ));
    }
    check_order(r, s, t, store.n())?;
    require_q(store, &[r, s, t])?;
    let p = Scalar1d::from_store(store, r, s, t);
    let best = exact_max_1d(model.id(), &p);
    let level = store.q_unchecked(t) + beta;
    Ok(best.gap((t - s) as f64) > prune_margin(level))
}
