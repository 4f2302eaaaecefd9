//! One-constraint dual for the simple-regression model, whose inner costs
//! are quadratic forms in `(θ₁, θ₂)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::exp_family::{quadratic_mu_max, regression_min_mean, QuadraticCoeffs};
use crate::stat_store::StatStore;

use super::closed::golden_max;

/// Inner quadratic forms `q_t^s` and `q_t^r` and the feasible multiplier range.
struct RegressionPair {
    fs: QuadraticCoeffs,
    fr: QuadraticCoeffs,
    pelt: f64,
    /// `None` when the dual is not usable (tie or non-convex form).
    mu_max: Option<f64>,
}

impl RegressionPair {
    fn new(store: &StatStore, r: usize, s: usize, t: usize, beta: f64) -> Result<Self> {
        if store.d() != 5 {
            return Err(Error::Config(format!(
                "regression statistics have 5 coordinates, store has {}",
                store.d()
            )));
        }
        if !(r < s && s < t && t <= store.n()) {
            return Err(Error::Index(format!(
                "need r < s < t <= {}, got ({r}, {s}, {t})",
                store.n()
            )));
        }
        let (qr, qs) = (store.q(r)?, store.q(s)?);
        Ok(Self::new_unchecked(store, r, s, t, beta, qr, qs))
    }

    fn new_unchecked(store: &StatStore, r: usize, s: usize, t: usize, beta: f64, qr: f64, qs: f64) -> Self {
        let mut sums = [0.0; 5];
        let mut mean = [0.0; 5];
        let seg = |a: usize, out: &mut [f64; 5]| {
            let (h, l) = (store.cumsum(t), store.cumsum(a));
            for k in 0..5 {
                out[k] = h[k] - l[k];
            }
        };
        seg(s, &mut sums);
        let len_s = (t - s) as f64;
        let fs = QuadraticCoeffs::from_regression_sums(&sums, len_s, qs + beta);
        for k in 0..5 {
            mean[k] = sums[k] / len_s;
        }
        let pelt = qs + beta + len_s * regression_min_mean(&mean);
        seg(r, &mut sums);
        let fr = QuadraticCoeffs::from_regression_sums(&sums, (t - r) as f64, qr + beta);
        let mu_max = quadratic_mu_max(&fs, &fr).ok();
        RegressionPair { fs, fr, pelt, mu_max }
    }

    /// Dual value lowered by its rounding-error bound, so that it stays a
    /// lower bound of the constrained minimum.
    fn dual(&self, mu: f64) -> f64 {
        let (v, err) = QuadraticCoeffs::combine(&self.fs, &self.fr, mu).min_value_with_error();
        v - err
    }

    fn maximise(&self) -> f64 {
        let Some(mu_max) = self.mu_max else {
            return self.pelt;
        };
        let f = |mu: f64| {
            let v = self.dual(mu);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        };
        let hi = if mu_max.is_finite() {
            mu_max * (1.0 - 1e-9)
        } else {
            // concave dual on [0, ∞): double until it stops increasing
            let mut hi = 1.0;
            let mut prev = f(0.0);
            for _ in 0..60 {
                let v = f(hi);
                if !(v > prev) {
                    break;
                }
                prev = v;
                hi *= 2.0;
            }
            hi
        };
        let (_, v) = golden_max(f, 0.0, hi, 120);
        v.max(self.pelt)
    }
}

/// Numeric maximum of the regression dual over `[0, μ_max)` by golden-section
/// search. Falls back to the PELT value when the forms tie or are not
/// strictly convex.
pub fn regression_dual_max(store: &StatStore, r: usize, s: usize, t: usize, beta: f64) -> Result<f64> {
    Ok(RegressionPair::new(store, r, s, t, beta)?.maximise())
}

/// Regression dual at `μ` drawn uniformly on `[0, 0.999·μ_max]` (`[0, 1]`
/// when `μ_max` is infinite).
pub fn regression_random_dual<R: Rng + ?Sized>(
    store: &StatStore,
    r: usize,
    s: usize,
    t: usize,
    beta: f64,
    rng: &mut R,
) -> Result<f64> {
    Ok(RegressionPair::new(store, r, s, t, beta)?.random(rng))
}

impl RegressionPair {
    fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let Some(mu_max) = self.mu_max else {
            return self.pelt;
        };
        let top = if mu_max.is_finite() { 0.999 * mu_max } else { 1.0 };
        let v = self.dual(rng.random::<f64>() * top);
        if v.is_nan() {
            self.pelt
        } else {
            v
        }
    }
}

/// Hot-path variants used by the segmenter; indices and costs are trusted.
pub(crate) fn regression_gap_max(store: &StatStore, r: usize, s: usize, t: usize, beta: f64) -> f64 {
    let p = RegressionPair::new_unchecked(store, r, s, t, beta, store.q_unchecked(r), store.q_unchecked(s));
    p.maximise() - store.q_unchecked(t) - beta
}

pub(crate) fn regression_gap_random<R: Rng + ?Sized>(
    store: &StatStore,
    r: usize,
    s: usize,
    t: usize,
    beta: f64,
    rng: &mut R,
) -> f64 {
    let p = RegressionPair::new_unchecked(store, r, s, t, beta, store.q_unchecked(r), store.q_unchecked(s));
    p.random(rng) - store.q_unchecked(t) - beta
}
