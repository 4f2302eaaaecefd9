//! Closed-form dual maxima for the Gaussian and mean-and-variance models.

use crate::error::{Error, Result};
use crate::exp_family::{meanvar_floor, meanvar_grad_a};
use crate::stat_store::StatStore;

use super::multi::DecisionData;

fn check_below(r: usize, s: usize, t: usize, store: &StatStore) -> Result<()> {
    if !(r < s && s < t && t <= store.n()) {
        return Err(Error::Index(format!(
            "need r < s < t <= {}, got ({r}, {s}, {t})",
            store.n()
        )));
    }
    store.q(r)?;
    store.q(s)?;
    Ok(())
}

/// Golden-section search for the maximum of a concave function on `[lo, hi]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..iters {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        }
    }
    if fa >= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Gaussian one-constraint dual `D(μ)` for any dimension.
fn gauss_dual(store: &StatStore, r: usize, s: usize, t: usize, mu: f64, beta: f64) -> f64 {
    let d = store.d();
    let l = 1.0 - mu;
    let sq: f64 = (0..d)
        .map(|k| {
            let m = (store.mean_coord(s, t, k) - mu * store.mean_coord(r, s, k)) / l;
            m * m
        })
        .sum();
    let len = (t - s) as f64;
    len * (-l * 0.5 * sq + mu * store.q_mean_unchecked(r, s)) + store.q_unchecked(s) + beta
}

/// Maximum over `μ ∈ [0, 1)` of the Gaussian one-constraint dual, any
/// dimension, with `r < s`:
///
/// ```text
/// −(t−s)/2‖S̄_st‖² + Q_s + β + (t−s)/2·(‖ΔS̄_rst‖ − R_rs)²₊,
/// R_rs = √(‖S̄_rs‖² + 2Q̄_rs).
/// ```
///
/// A negative radicand falls back to a numeric search on the dual.
pub fn gauss_closed_max(store: &StatStore, r: usize, s: usize, t: usize, beta: f64) -> Result<f64> {
    check_below(r, s, t, store)?;
    Ok(gauss_closed_unchecked(store, r, s, t, beta))
}

pub(crate) fn gauss_closed_unchecked(store: &StatStore, r: usize, s: usize, t: usize, beta: f64) -> f64 {
    let d = store.d();
    let mut st2 = 0.0;
    let mut rs2 = 0.0;
    let mut delta2 = 0.0;
    for k in 0..d {
        let a = store.mean_coord(s, t, k);
        let b = store.mean_coord(r, s, k);
        st2 += a * a;
        rs2 += b * b;
        delta2 += (a - b) * (a - b);
    }
    let len = (t - s) as f64;
    let pelt = -0.5 * len * st2 + store.q_unchecked(s) + beta;
    let radicand = rs2 + 2.0 * store.q_mean_unchecked(r, s);
    if radicand < 0.0 {
        log::debug!("negative radius at (r, s, t) = ({r}, {s}, {t}): {radicand}, searching numerically");
        let (_, v) = golden_max(|mu| gauss_dual(store, r, s, t, mu, beta), 0.0, 1.0 - 1e-12, 200);
        return v.max(pelt);
    }
    let gap = radicand.sqrt() - delta2.sqrt();
    if gap > 0.0 {
        pelt + 0.5 * len * gap * gap
    } else {
        pelt
    }
}

/// Maximiser and maximum of a decision function. Unused coordinates are 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedMax {
    pub x: [f64; 2],
    pub value: f64,
}

/// One-constraint maximum of the mean-and-variance decision function
/// `½(1 + log w(x)) − Q̄_st − x·x₂` with `w(x) = w₀ + c₁x − a²x²`.
fn meanvar_axis(u0: f64, v0: f64, a: f64, b: f64, qbar: f64, x2: f64) -> (f64, f64) {
    let w0 = v0 - u0 * u0;
    let c1 = b - 2.0 * u0 * a;
    let value = |x: f64| {
        let u = u0 + x * a;
        let w = (v0 + x * b) - u * u;
        if w > meanvar_floor(v0 + x * b) {
            let lin = if x == 0.0 { 0.0 } else { x * x2 };
            0.5 * (1.0 + w.ln()) - qbar - lin
        } else {
            f64::NEG_INFINITY
        }
    };
    let at_zero = value(0.0);
    if x2 == f64::INFINITY {
        return (0.0, at_zero);
    }
    let a2 = a * a;
    let x0 = c1 / (2.0 * a2);
    let x1 = x0 * x0 + w0 / a2;
    let x = if a2 > 0.0 && x0.is_finite() && x1.is_finite() {
        let z = -2.0 * x2 * x1 / (1.0 + 1f64.hypot(2.0 * x2.abs() * x1.sqrt()));
        (x0 + z).max(0.0)
    } else if c1 * x2 > 0.0 {
        (0.5 / x2 - w0 / c1).max(0.0)
    } else if c1 / (2.0 * w0) - x2 > 0.0 && c1 >= 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    } else {
        0.0
    };
    let v = value(x);
    if v > at_zero {
        (x, v)
    } else {
        (0.0, at_zero)
    }
}

/// Closed-form maximum of the mean-and-variance decision function with one
/// or two constraints below `s` (single column, statistic `(y, y²)`).
///
/// With two constraints the maximum is the best of the two axis maxima and
/// the interior critical point when it lies in the positive quadrant.
pub fn meanvar_closed_max(data: &DecisionData) -> Result<ClosedMax> {
    if data.sigma0.len() != 2 || !(1..=2).contains(&data.q()) {
        return Err(Error::Config(
            "closed forms need a single meanvar column and one or two constraints".into(),
        ));
    }
    let (u0, v0) = (data.sigma0[0], data.sigma0[1]);
    if v0 - u0 * u0 <= meanvar_floor(v0) {
        return Err(Error::DegenerateSegment(format!(
            "zero variance on the last segment (mean {u0})"
        )));
    }
    Ok(meanvar_closed_unchecked(data))
}

pub(crate) fn meanvar_closed_unchecked(data: &DecisionData) -> ClosedMax {
    let (u0, v0) = (data.sigma0[0], data.sigma0[1]);
    let (a1, b1) = (data.dirs[0][0], data.dirs[0][1]);
    let (x, v) = meanvar_axis(u0, v0, a1, b1, data.qbar_st, data.dq[0]);
    let mut best = ClosedMax { x: [x, 0.0], value: v };
    if data.q() == 1 || best.value == f64::INFINITY {
        return best;
    }
    let (a2, b2) = (data.dirs[1][0], data.dirs[1][1]);
    let (x, v) = meanvar_axis(u0, v0, a2, b2, data.qbar_st, data.dq[1]);
    if v > best.value {
        best = ClosedMax { x: [0.0, x], value: v };
        if v == f64::INFINITY {
            return best;
        }
    }
    if let Some(dir) = meanvar_unbounded_ray(data) {
        return ClosedMax { x: dir, value: f64::INFINITY };
    }
    if let Some(inner) = meanvar_interior(data) {
        if inner.value > best.value {
            best = inner;
        }
    }
    best
}

/// Direction in the positive quadrant along which the mean stays fixed, the
/// variance grows and the linear part does not, so that the decision
/// function is unbounded.
fn meanvar_unbounded_ray(data: &DecisionData) -> Option<[f64; 2]> {
    let (a1, b1) = (data.dirs[0][0], data.dirs[0][1]);
    let (a2, b2) = (data.dirs[1][0], data.dirs[1][1]);
    if !(a1 * a2 < 0.0) {
        return None;
    }
    let d = [a2.abs(), a1.abs()];
    let growth = b1 * d[0] + b2 * d[1];
    let slope = data.dq[0] * d[0] + data.dq[1] * d[1];
    (growth > 0.0 && slope <= 0.0).then_some(d)
}

/// Interior critical point of the two-constraint decision function:
/// `θ = −M⁻ᵀΔQ̄`, `x = M⁻¹(∇A(θ) − S̄_st)` with the `ΔS̄_r` as columns of `M`.
fn meanvar_interior(data: &DecisionData) -> Option<ClosedMax> {
    let (a1, b1) = (data.dirs[0][0], data.dirs[0][1]);
    let (a2, b2) = (data.dirs[1][0], data.dirs[1][1]);
    let (q1, q2) = (data.dq[0], data.dq[1]);
    let det = a1 * b2 - b1 * a2;
    let scale = a1.hypot(b1) * a2.hypot(b2);
    if !(det.abs() > 1e-12 * scale) {
        return None;
    }
    let theta1 = (-q1 * b2 + q2 * b1) / det;
    let theta2 = (-a1 * q2 + a2 * q1) / det;
    if !(theta2 < 0.0) || !theta1.is_finite() {
        return None;
    }
    let m = meanvar_grad_a(theta1, theta2);
    let du = m[0] - data.sigma0[0];
    let dv = m[1] - data.sigma0[1];
    let x = [(b2 * du - a2 * dv) / det, (-b1 * du + a1 * dv) / det];
    if !(x[0] > 0.0 && x[1] > 0.0) {
        return None;
    }
    let u = data.sigma0[0] + x[0] * a1 + x[1] * a2;
    let v = data.sigma0[1] + x[0] * b1 + x[1] * b2;
    let w = v - u * u;
    if !(w > meanvar_floor(v)) {
        return None;
    }
    let value = 0.5 * (1.0 + w.ln()) - data.phi(&x);
    value.is_finite().then_some(ClosedMax { x, value })
}

/// Mean-and-variance dual maximum at `(r, s, t)` with one constraint `r`, or
/// two constraints `r` and `r2`, all below `s`. Returns the dual value, to
/// be compared with `Q_t + β`.
pub fn meanvar_closed(
    store: &StatStore,
    r: usize,
    s: usize,
    t: usize,
    beta: f64,
    r2: Option<usize>,
) -> Result<f64> {
    check_below(r, s, t, store)?;
    let mut rs = vec![r];
    if let Some(r2) = r2 {
        check_below(r2, s, t, store)?;
        if r2 == r {
            return Err(Error::Index(format!("constraint {r} listed twice")));
        }
        rs.push(r2);
    }
    let qt = store.q(t)?;
    let data = DecisionData::from_store(store, s, t, &rs);
    let best = meanvar_closed_max(&data)?;
    let x = &best.x[..data.q()];
    Ok(qt + beta + data.gap(x, best.value))
}
