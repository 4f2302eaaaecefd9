//! Multi-constraint dual and decision functions.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::exp_family::ModelFamily;
use crate::stat_store::{psi, StatStore};

use super::{mu_to_x, x_to_mu};

/// Candidate `s` under test at time `t` with its constraint indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSelection {
    pub s: usize,
    pub t: usize,
    pub constraints: Vec<usize>,
}

impl ConstraintSelection {
    /// Validates that constraints are distinct, differ from `s` and lie in
    /// `[0, t−1]`, and that `s < t`.
    pub fn new(s: usize, t: usize, constraints: Vec<usize>) -> Result<Self> {
        if s >= t {
            return Err(Error::Index(format!("need s < t, got s = {s}, t = {t}")));
        }
        for (i, &r) in constraints.iter().enumerate() {
            if r == s || r >= t {
                return Err(Error::Index(format!(
                    "constraint {r} must differ from s = {s} and be below t = {t}"
                )));
            }
            if constraints[..i].contains(&r) {
                return Err(Error::Index(format!("constraint {r} listed twice")));
            }
        }
        Ok(ConstraintSelection { s, t, constraints })
    }
}

/// Precomputed ingredients of a decision function:
/// `σ(x) = S̄_st + Σ x_r ΔS̄_rst` and `φ(x) = Q̄_st + Σ x_r ΔQ̄_rst`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionData {
    pub len: f64,
    pub sigma0: Vec<f64>,
    /// Row `r` holds `ΔS̄_rst`.
    pub dirs: Vec<Vec<f64>>,
    pub psi: Vec<f64>,
    pub qbar_st: f64,
    pub dq: Vec<f64>,
}

impl DecisionData {
    pub fn new(store: &StatStore, sel: &ConstraintSelection) -> Result<Self> {
        let ConstraintSelection { s, t, .. } = *sel;
        if t > store.n() {
            return Err(Error::Index(format!("t = {t} exceeds n = {}", store.n())));
        }
        store.q(s)?;
        store.q(t)?;
        for &r in &sel.constraints {
            store.q(r)?;
        }
        Ok(Self::from_store(store, s, t, &sel.constraints))
    }

    /// Unchecked construction; all indices must be valid with computed costs.
    pub fn from_store(store: &StatStore, s: usize, t: usize, rs: &[usize]) -> Self {
        let d = store.d();
        let mut sigma0 = vec![0.0; d];
        store.mean_into(s, t, &mut sigma0);
        let qbar_st = store.q_mean_unchecked(s, t);
        let mut rs_mean = vec![0.0; d];
        let mut dirs = Vec::with_capacity(rs.len());
        let mut psis = Vec::with_capacity(rs.len());
        let mut dq = Vec::with_capacity(rs.len());
        for &r in rs {
            let p = psi(r, s);
            store.mean_into(r, s, &mut rs_mean);
            dirs.push(sigma0.iter().zip(&rs_mean).map(|(a, b)| p * (a - b)).collect());
            psis.push(p);
            dq.push(p * (qbar_st - store.q_mean_unchecked(r, s)));
        }
        DecisionData {
            len: (t - s) as f64,
            sigma0,
            dirs,
            psi: psis,
            qbar_st,
            dq,
        }
    }

    pub fn q(&self) -> usize {
        self.dirs.len()
    }

    pub fn sigma_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.sigma0);
        for (xr, dir) in x.iter().zip(&self.dirs) {
            if *xr != 0.0 {
                for (o, d) in out.iter_mut().zip(dir) {
                    *o += xr * d;
                }
            }
        }
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        // a zero multiplier leaves a constraint with infinite ΔQ̄ inactive
        self.qbar_st
            + x.iter()
                .zip(&self.dq)
                .map(|(a, b)| if *a == 0.0 { 0.0 } else { a * b })
                .sum::<f64>()
    }

    /// `1 + Σ ψ_r x_r`, which must stay positive.
    pub fn l_factor(&self, x: &[f64]) -> f64 {
        1.0 + x.iter().zip(&self.psi).map(|(a, b)| a * b).sum::<f64>()
    }

    /// `𝔻(x)` without feasibility checks; boundary points use limit values.
    pub fn value(&self, model: &ModelFamily, x: &[f64], buf: &mut [f64]) -> f64 {
        self.sigma_into(x, buf);
        -model.dstar_closure_unchecked(buf) - self.phi(x)
    }

    /// True when `x ≥ 0`, `1 + Σψx > 0` and `σ(x)` is inside the mean domain
    /// (or `x = 0`).
    pub fn feasible(&self, model: &ModelFamily, x: &[f64], buf: &mut [f64]) -> bool {
        if x.iter().any(|v| !(*v >= 0.0)) || self.l_factor(x) <= 0.0 {
            return false;
        }
        if x.iter().all(|v| *v == 0.0) {
            return true;
        }
        self.sigma_into(x, buf);
        model.in_domain(buf)
    }

    /// Gradient of `𝔻` at an interior point: `−ΔS̄_r·(∇A)⁻¹(σ(x)) − ΔQ̄_r`.
    pub fn gradient(&self, model: &ModelFamily, x: &[f64], buf: &mut [f64]) -> Option<Vec<f64>> {
        self.sigma_into(x, buf);
        let theta = model.grad_a_inv(buf).ok()?;
        Some(
            self.dirs
                .iter()
                .zip(&self.dq)
                .map(|(dir, dq)| -dir.iter().zip(&theta).map(|(a, b)| a * b).sum::<f64>() - dq)
                .collect(),
        )
    }

    /// Dual gap `D − (Q_t + β)` implied by `𝔻(x) = value`.
    pub fn gap(&self, x: &[f64], value: f64) -> f64 {
        if value.is_infinite() || value.is_nan() {
            return value;
        }
        self.len * value / self.l_factor(x)
    }

    /// Largest `λ` with `λ·w` feasible, `w ≥ 0`.
    pub fn ray_max(&self, model: &ModelFamily, w: &[f64]) -> f64 {
        let mut dir = vec![0.0; self.sigma0.len()];
        for (wr, d) in w.iter().zip(&self.dirs) {
            for (o, v) in dir.iter_mut().zip(d) {
                *o += wr * v;
            }
        }
        let mut lam = model.max_step(&self.sigma0, &dir);
        let slope: f64 = w.iter().zip(&self.psi).map(|(a, b)| a * b).sum();
        if slope < 0.0 {
            lam = lam.min(1.0 / -slope);
        }
        lam
    }
}

/// Multi-constraint dual
/// `D(μ) = (t−s)[−l(μ)D*(m(μ)) + Σ μ_r ψ_rs Q̄_rs] + Q_s + β` with
/// `l(μ) = 1 − Σ μ_r ψ_rs` and `m(μ) = (S̄_st − Σ μ_r ψ_rs S̄_rs)/l(μ)`.
pub fn dual_multi(
    model: &ModelFamily,
    store: &StatStore,
    sel: &ConstraintSelection,
    mu: &[f64],
    beta: f64,
) -> Result<f64> {
    let data = DecisionData::new(store, sel)?;
    if mu.len() != data.q() {
        return Err(Error::Index(format!(
            "expected {} multipliers, got {}",
            data.q(),
            mu.len()
        )));
    }
    let s = sel.s;
    let mut l = 1.0;
    let mut lin = 0.0;
    let d = store.d();
    let mut num = data.sigma0.clone();
    let mut rs_mean = vec![0.0; d];
    for (k, (&m, &r)) in mu.iter().zip(&sel.constraints).enumerate() {
        if !(m >= 0.0) {
            return Err(Error::Domain {
                coord: k,
                value: m,
                lower: 0.0,
                upper: f64::INFINITY,
            });
        }
        let p = data.psi[k];
        l -= m * p;
        lin += m * p * store.q_mean_unchecked(r, s);
        store.mean_into(r, s, &mut rs_mean);
        for (o, v) in num.iter_mut().zip(&rs_mean) {
            *o -= m * p * v;
        }
    }
    if l <= 0.0 {
        return Err(Error::Domain {
            coord: 0,
            value: l,
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }
    let m: Vec<f64> = num.iter().map(|v| v / l).collect();
    // boundary means give the limit of D*, points outside the closure fail
    let dstar = model.dstar_closure(&m)?;
    Ok(data.len * (-l * dstar + lin) + store.q(s)? + beta)
}

fn infeasible_x(x: &[f64]) -> Error {
    let coord = x.iter().position(|v| !(*v >= 0.0)).unwrap_or(0);
    Error::Domain {
        coord,
        value: x.get(coord).copied().unwrap_or(f64::NAN),
        lower: 0.0,
        upper: f64::INFINITY,
    }
}

/// Multi-constraint decision function `𝔻(x) = −D*(σ(x)) − φ(x)`.
pub fn decision_multi(
    model: &ModelFamily,
    store: &StatStore,
    sel: &ConstraintSelection,
    x: &[f64],
) -> Result<f64> {
    let data = DecisionData::new(store, sel)?;
    if x.len() != data.q() {
        return Err(Error::Index(format!(
            "expected {} coordinates, got {}",
            data.q(),
            x.len()
        )));
    }
    let mut buf = vec![0.0; store.d()];
    if !data.feasible(model, x, &mut buf) {
        return Err(infeasible_x(x));
    }
    let v = data.value(model, x, &mut buf);
    if v.is_nan() {
        return Err(infeasible_x(x));
    }
    Ok(v)
}

/// Interior critical point `x* = M⁻¹(∇A(−M⁻ᵀΔQ̄) − S̄_st)` where the columns
/// of `M` are the `ΔS̄_rst`. Returns `None` when `x*` leaves the positive
/// orthant or the dual domain.
pub fn decision_multi_critical(
    model: &ModelFamily,
    store: &StatStore,
    sel: &ConstraintSelection,
) -> Result<Option<Vec<f64>>> {
    let data = DecisionData::new(store, sel)?;
    let d = store.d();
    if data.q() != d {
        return Err(Error::Config(format!(
            "critical point needs exactly {d} constraints, got {}",
            data.q()
        )));
    }
    let m = DMatrix::from_fn(d, d, |i, j| data.dirs[j][i]);
    let sv = m.clone().svd(false, false).singular_values;
    let (hi, lo) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(h, l), v| (h.max(*v), l.min(*v)));
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond < 1e12) {
        return Err(Error::SingularSystem(cond));
    }
    let lu = m.clone().lu();
    let rhs = -DVector::from_column_slice(&data.dq);
    let theta = match m.transpose().lu().solve(&rhs) {
        Some(v) => v,
        None => return Err(Error::SingularSystem(cond)),
    };
    let theta: Vec<f64> = theta.iter().copied().collect();
    if !model.natural_contains(&theta) {
        return Ok(None);
    }
    let mean = model.grad_a(&theta)?;
    let diff = DVector::from_iterator(d, mean.iter().zip(&data.sigma0).map(|(a, b)| a - b));
    let x = match lu.solve(&diff) {
        Some(v) => v,
        None => return Err(Error::SingularSystem(cond)),
    };
    let x: Vec<f64> = x.iter().copied().collect();
    if x.iter().any(|v| !(*v >= 0.0)) || data.l_factor(&x) <= 0.0 || !model.in_domain(&mean) {
        return Ok(None);
    }
    Ok(Some(x))
}

/// Evaluates `𝔻` at a random feasible point: a direction `w` is drawn
/// uniformly on the simplex (the single direction `1` for one constraint),
/// then a multiplier `ν` uniformly on `[0, 0.999·ν_max]`, where `ν_max`
/// maps the largest feasible step along `w` through `ν = λ/(1+λ)`.
pub fn random_decision<R: Rng + ?Sized>(
    model: &ModelFamily,
    data: &DecisionData,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let q = data.q();
    let mut w: Vec<f64> = (0..q).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|v| *v /= total);
    } else {
        w.fill(1.0 / q as f64);
    }
    let nu_max = x_to_mu(data.ray_max(model, &w));
    let nu = rng.random::<f64>() * 0.999 * nu_max;
    let lam = mu_to_x(nu);
    let mut x: Vec<f64> = w.iter().map(|v| v * lam).collect();
    let mut buf = vec![0.0; data.sigma0.len()];
    if !data.feasible(model, &x, &mut buf) {
        x.fill(0.0);
    }
    let v = data.value(model, &x, &mut buf);
    (x, v)
}
