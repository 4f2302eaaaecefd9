//! Projected quasi-Newton ascent on the decision function.

use crate::error::Result;
use crate::exp_family::ModelFamily;
use crate::stat_store::StatStore;

use super::multi::{ConstraintSelection, DecisionData};
use super::DualEvalPlan;

/// Best point found by the ascent. `value` is a genuine evaluation of `𝔻`.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Estimate of `sup 𝔻` over the feasible set by projected BFGS ascent from
/// `x = 0`. The result never exceeds the true supremum.
pub fn quasi_newton_max(
    model: &ModelFamily,
    store: &StatStore,
    sel: &ConstraintSelection,
    plan: &DualEvalPlan,
) -> Result<f64> {
    let data = DecisionData::new(store, sel)?;
    Ok(maximize(&data, model, plan.qn_max_iters, plan.qn_tol, None).value)
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 50;
const MAX_DOUBLINGS: usize = 30;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Core ascent loop. With `stop_gap = Some(g)` the loop returns as soon as
/// the dual gap exceeds `g`.
pub(crate) fn maximize(
    data: &DecisionData,
    model: &ModelFamily,
    max_iters: usize,
    tol: f64,
    stop_gap: Option<f64>,
) -> AscentResult {
    let q = data.q();
    let mut buf = vec![0.0; data.sigma0.len()];
    let mut x = vec![0.0; q];
    let mut f = data.value(model, &x, &mut buf);
    let done = |x: &[f64], f: f64| stop_gap.is_some_and(|g| data.gap(x, f) > g);
    let res = |x: Vec<f64>, value: f64, iterations: usize| AscentResult {
        x,
        value,
        iterations,
    };
    if !f.is_finite() || done(&x, f) {
        return res(x, f, 0);
    }
    let Some(mut g) = data.gradient(model, &x, &mut buf) else {
        // S̄_st on the boundary: keep the value at zero
        return res(x, f, 0);
    };
    // inverse Hessian approximation of −𝔻 on the free coordinates
    let mut h = vec![0.0; q * q];
    let gnorm = dot(&g, &g).sqrt();
    for i in 0..q {
        h[i * q + i] = if gnorm > 0.0 { 1.0 / gnorm } else { 1.0 };
    }
    let mut first_update = true;
    let mut iters = 0;
    let mut trial = vec![0.0; q];
    let mut dir = vec![0.0; q];
    while iters < max_iters {
        iters += 1;
        let free: Vec<bool> = (0..q).map(|i| x[i] > 0.0 || g[i] > 0.0).collect();
        let pg: f64 = (0..q).filter(|&i| free[i]).map(|i| g[i] * g[i]).sum::<f64>().sqrt();
        if pg < tol {
            break;
        }
        for i in 0..q {
            dir[i] = if free[i] {
                (0..q).filter(|&j| free[j]).map(|j| h[i * q + j] * g[j]).sum()
            } else {
                0.0
            };
        }
        if dot(&dir, &g) <= 0.0 {
            // lost ascent direction: restart from a scaled gradient step
            for i in 0..q {
                dir[i] = if free[i] { g[i] / pg } else { 0.0 };
            }
            h.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..q {
                h[i * q + i] = 1.0 / pg;
            }
            first_update = true;
        }
        let project = |alpha: f64, out: &mut [f64]| {
            for i in 0..q {
                out[i] = (x[i] + alpha * dir[i]).max(0.0);
            }
        };
        let accept = |cand: &[f64], fc: f64| {
            let step: Vec<f64> = cand.iter().zip(&x).map(|(a, b)| a - b).collect();
            fc.is_finite() && fc >= f + ARMIJO * dot(&g, &step) && fc > f
        };
        let mut alpha = 1.0;
        let mut found = None;
        for _ in 0..MAX_HALVINGS {
            project(alpha, &mut trial);
            if data.feasible(model, &trial, &mut buf) {
                let ft = data.value(model, &trial, &mut buf);
                if accept(&trial, ft) {
                    found = Some(ft);
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some(mut ft) = found else { break };
        if alpha == 1.0 {
            // the full step worked: try longer ones while they keep improving
            let mut longer = trial.clone();
            for _ in 0..MAX_DOUBLINGS {
                alpha *= 2.0;
                project(alpha, &mut longer);
                if !data.feasible(model, &longer, &mut buf) {
                    break;
                }
                let fl = data.value(model, &longer, &mut buf);
                if !(fl > ft) {
                    break;
                }
                ft = fl;
                trial.copy_from_slice(&longer);
            }
        }
        let Some(g_new) = data.gradient(model, &trial, &mut buf) else {
            x.copy_from_slice(&trial);
            f = ft;
            break;
        };
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&g_new).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if first_update {
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..q {
                    h[i * q + i] = scale;
                }
                first_update = false;
            }
            bfgs_update(&mut h, &s, &y, q);
        }
        x.copy_from_slice(&trial);
        f = ft;
        g = g_new;
        if f == f64::INFINITY || done(&x, f) {
            break;
        }
    }
    res(x, f, iters)
}

/// `H ← (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ` with `ρ = 1/(yᵀs)`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], q: usize) {
    let rho = 1.0 / dot(s, y);
    let hy: Vec<f64> = (0..q).map(|i| (0..q).map(|j| h[i * q + j] * y[j]).sum()).collect();
    let yhy = dot(y, &hy);
    for i in 0..q {
        for j in 0..q {
            h[i * q + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
