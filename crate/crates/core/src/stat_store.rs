//! Prefix sums of sufficient statistics and the running global costs.
//!
//! Segment statistics use half-open index pairs: `(a, b)` with `a < b` covers
//! observations `a+1..=b` (1-based), i.e. rows `a..b` of the statistic matrix.
//! Means are order-symmetric, so `(a, b)` and `(b, a)` give the same value.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct StatStore {
    n: usize,
    d: usize,
    cumsum: Vec<f64>,
    q_values: Vec<f64>,
}

impl StatStore {
    /// Builds the store from a row-major `n × d` statistic matrix.
    pub fn new(d: usize, stats: &[f64]) -> Result<Self> {
        if d == 0 || stats.len() % d != 0 {
            return Err(Error::Index(format!(
                "statistic matrix of length {} is not a multiple of d = {d}",
                stats.len()
            )));
        }
        let n = stats.len() / d;
        let mut cumsum = vec![0.0; (n + 1) * d];
        prefix_sums(d, stats, &mut cumsum);
        Ok(StatStore {
            n,
            d,
            cumsum,
            q_values: Vec::with_capacity(n + 1),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Prefix sum `S_0i`.
    pub fn cumsum(&self, i: usize) -> &[f64] {
        &self.cumsum[i * self.d..(i + 1) * self.d]
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::EmptySegment(a));
        }
        if a > self.n || b > self.n {
            return Err(Error::Index(format!(
                "index pair ({a}, {b}) out of range 0..={}",
                self.n
            )));
        }
        Ok(())
    }

    /// Statistic sum over the segment between `a` and `b`.
    pub fn sum(&self, a: usize, b: usize) -> Result<Vec<f64>> {
        self.check_pair(a, b)?;
        let (lo, hi) = (a.min(b), a.max(b));
        Ok(self
            .cumsum(hi)
            .iter()
            .zip(self.cumsum(lo))
            .map(|(h, l)| h - l)
            .collect())
    }

    /// Order-symmetric mean statistic `S̄_ab`.
    pub fn mean_stat(&self, a: usize, b: usize) -> Result<Vec<f64>> {
        self.check_pair(a, b)?;
        let mut out = vec![0.0; self.d];
        self.mean_into(a, b, &mut out);
        Ok(out)
    }

    /// Unchecked mean statistic written into `out`; `a != b` is assumed.
    #[inline]
    pub fn mean_into(&self, a: usize, b: usize, out: &mut [f64]) {
        let (lo, hi) = (a.min(b), a.max(b));
        let len = (hi - lo) as f64;
        let d = self.d;
        let h = &self.cumsum[hi * d..(hi + 1) * d];
        let l = &self.cumsum[lo * d..(lo + 1) * d];
        for k in 0..d {
            out[k] = (h[k] - l[k]) / len;
        }
    }

    /// Unchecked scalar mean for `d = 1` stores.
    #[inline]
    pub fn mean1(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = (a.min(b), a.max(b));
        (self.cumsum[hi] - self.cumsum[lo]) / (hi - lo) as f64
    }

    /// Coordinate `k` of the unchecked mean.
    #[inline]
    pub fn mean_coord(&self, a: usize, b: usize, k: usize) -> f64 {
        let (lo, hi) = (a.min(b), a.max(b));
        (self.cumsum[hi * self.d + k] - self.cumsum[lo * self.d + k]) / (hi - lo) as f64
    }

    fn check_triple(&self, r: usize, s: usize, t: usize) -> Result<()> {
        if r == s {
            return Err(Error::Index(format!("constraint index r = {r} equals s")));
        }
        if s >= t {
            return Err(Error::Index(format!("need s < t, got s = {s}, t = {t}")));
        }
        if r > self.n || t > self.n {
            return Err(Error::Index(format!(
                "indices ({r}, {s}, {t}) out of range 0..={}",
                self.n
            )));
        }
        Ok(())
    }

    /// `ΔS̄_rst = ψ_rs(S̄_st − S̄_rs)` with `ψ_rs = 1` if `r < s`, else −1.
    pub fn delta_mean(&self, r: usize, s: usize, t: usize) -> Result<Vec<f64>> {
        self.check_triple(r, s, t)?;
        let psi = psi(r, s);
        Ok((0..self.d)
            .map(|k| psi * (self.mean_coord(s, t, k) - self.mean_coord(r, s, k)))
            .collect())
    }

    /// Appends the next global cost `Q_i`, `i` being the current count.
    pub fn push_q(&mut self, q: f64) {
        self.q_values.push(q);
    }

    /// Number of global costs computed so far.
    pub fn q_len(&self) -> usize {
        self.q_values.len()
    }

    pub fn q(&self, i: usize) -> Result<f64> {
        self.q_values.get(i).copied().ok_or(Error::State(i))
    }

    /// Unchecked `Q_i`.
    #[inline]
    pub fn q_unchecked(&self, i: usize) -> f64 {
        self.q_values[i]
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q_values
    }

    /// `Q̄_rs = (Q_s − Q_r)/(s − r)`, symmetric in its arguments.
    pub fn q_mean(&self, r: usize, s: usize) -> Result<f64> {
        if r == s {
            return Err(Error::EmptySegment(r));
        }
        let (qr, qs) = (self.q(r)?, self.q(s)?);
        Ok((qs - qr) / (s as f64 - r as f64))
    }

    #[inline]
    pub fn q_mean_unchecked(&self, r: usize, s: usize) -> f64 {
        (self.q_values[s] - self.q_values[r]) / (s as f64 - r as f64)
    }

    /// `ΔQ̄_rst = ψ_rs(Q̄_st − Q̄_rs)`.
    pub fn delta_q(&self, r: usize, s: usize, t: usize) -> Result<f64> {
        self.check_triple(r, s, t)?;
        for i in [r, s, t] {
            self.q(i)?;
        }
        Ok(psi(r, s) * (self.q_mean_unchecked(s, t) - self.q_mean_unchecked(r, s)))
    }
}

/// `ψ_rs`: 1 when `r < s`, −1 otherwise.
#[inline]
pub fn psi(r: usize, s: usize) -> f64 {
    if r < s {
        1.0
    } else {
        -1.0
    }
}

#[cfg(not(feature = "compensated"))]
fn prefix_sums(d: usize, stats: &[f64], cumsum: &mut [f64]) {
    for (i, row) in stats.chunks_exact(d).enumerate() {
        for k in 0..d {
            cumsum[(i + 1) * d + k] = cumsum[i * d + k] + row[k];
        }
    }
}

#[cfg(feature = "compensated")]
fn prefix_sums(d: usize, stats: &[f64], cumsum: &mut [f64]) {
    // Neumaier summation, one accumulator per coordinate
    let mut sum = vec![0.0f64; d];
    let mut comp = vec![0.0f64; d];
    for (i, row) in stats.chunks_exact(d).enumerate() {
        for k in 0..d {
            let x = row[k];
            let t = sum[k] + x;
            if sum[k].abs() >= x.abs() {
                comp[k] += (sum[k] - t) + x;
            } else {
                comp[k] += (x - t) + sum[k];
            }
            sum[k] = t;
            cumsum[(i + 1) * d + k] = t + comp[k];
        }
    }
}

fn mean_and_var(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    let v = y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, v)
}

/// Residuals of the four mean/variance decompositions of `tV(y_0t)`.
///
/// With `L = tV(y_0t) − (t−i)V(y_it) − iV(y_0i)` the right-hand sides are
/// `((t−i)i/t)(ȳ_it − ȳ_0i)²`, `(ti/(t−i))(ȳ_0t − ȳ_0i)²`,
/// `(t(t−i)/i)(ȳ_0t − ȳ_it)²` and `i(ȳ_0t − ȳ_0i)² + (t−i)(ȳ_0t − ȳ_it)²`.
/// `V` is the population variance; `y_ab` covers values `a+1..=b`.
pub fn variance_identity_residuals(values: &[f64], i: usize, t: usize) -> Result<[f64; 4]> {
    if !(1 <= i && i < t && t <= values.len()) {
        return Err(Error::Index(format!(
            "need 1 <= i < t <= {}, got i = {i}, t = {t}",
            values.len()
        )));
    }
    let (m0t, v0t) = mean_and_var(&values[..t]);
    let (m0i, v0i) = mean_and_var(&values[..i]);
    let (mit, vit) = mean_and_var(&values[i..t]);
    let (tf, fi) = (t as f64, i as f64);
    let ti = tf - fi;
    let lhs = tf * v0t - ti * vit - fi * v0i;
    Ok([
        lhs - ti * fi / tf * (mit - m0i).powi(2),
        lhs - tf * fi / ti * (m0t - m0i).powi(2),
        lhs - tf * ti / fi * (m0t - mit).powi(2),
        lhs - (fi * (m0t - m0i).powi(2) + ti * (m0t - mit).powi(2)),
    ])
}
