//! Simulated series: alternating-parameter benchmarks and worst cases for
//! pruning.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exp_family::{Location, ModelFamily, ModelId};
use crate::series::Series;

/// Description of a simulated series. Segments of length `segment_len`
/// alternate between `params[0]` and `params[1]`; `dim` independent copies
/// share the same change points and form the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub model: ModelId,
    pub n: usize,
    pub segment_len: usize,
    pub params: [f64; 2],
    pub dim: usize,
    pub seed: u64,
    /// Binomial trials and negative-binomial successes.
    pub trials: u32,
}

impl SimSpec {
    /// Single-column, no-change spec with the default parameter pair.
    pub fn new(model: ModelId, n: usize, seed: u64) -> Self {
        SimSpec {
            model,
            n,
            segment_len: n,
            params: default_params(model),
            dim: 1,
            seed,
            trials: 10,
        }
    }

    pub fn with_segment_len(mut self, k: usize) -> Self {
        self.segment_len = k;
        self
    }

    pub fn with_params(mut self, params: [f64; 2]) -> Self {
        self.params = params;
        self
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    /// Right ends of the true segments.
    pub fn changepoints(&self) -> Vec<usize> {
        let k = self.segment_len.max(1);
        let mut out: Vec<usize> = (1..).map(|i| i * k).take_while(|&c| c < self.n).collect();
        out.push(self.n);
        out
    }
}

/// Default parameter pair of each model:
///
/// | model | parameter | values |
/// |---|---|---|
/// | gauss | mean (sd 1) | 0, 1 |
/// | poisson | rate | 3, 4 |
/// | exponential | rate | 1, 0.5 |
/// | geometric, bernoulli, binomial, negbin | p | 0.5, 0.7 |
/// | variance | sd (mean 0) | 1, 2 |
/// | meanvar | m, for N(m, m²) | 1, 2 |
/// | quadratic-regression | slope (x ~ N(0,1), unit noise) | 1, 2 |
pub fn default_params(model: ModelId) -> [f64; 2] {
    match model {
        ModelId::Gauss => [0.0, 1.0],
        ModelId::Poisson => [3.0, 4.0],
        ModelId::Exponential => [1.0, 0.5],
        ModelId::Geometric | ModelId::Bernoulli | ModelId::Binomial | ModelId::NegBin => [0.5, 0.7],
        ModelId::Variance => [1.0, 2.0],
        ModelId::MeanVar => [1.0, 2.0],
        ModelId::QuadraticRegression => [1.0, 2.0],
    }
}

fn check_param(model: ModelId, p: f64) -> Result<()> {
    let ok = p.is_finite()
        && match model {
            ModelId::Gauss | ModelId::QuadraticRegression => true,
            ModelId::Poisson | ModelId::Exponential | ModelId::Variance => p > 0.0,
            ModelId::Bernoulli => (0.0..=1.0).contains(&p),
            ModelId::Geometric | ModelId::NegBin => p > 0.0 && p <= 1.0,
            ModelId::Binomial => (0.0..=1.0).contains(&p),
            ModelId::MeanVar => p != 0.0,
        };
    if ok {
        Ok(())
    } else {
        Err(Error::Config(format!("invalid parameter {p} for model {model}")))
    }
}

/// Draws one observation, or two (`x`, `y`) for the regression model.
fn draw<R: Rng>(model: ModelId, p: f64, trials: u32, rng: &mut R, out: &mut Vec<f64>) {
    let u = |rng: &mut R| rng.random::<f64>();
    let normal = |rng: &mut R| rng.sample::<f64, _>(StandardNormal);
    let v = match model {
        ModelId::Gauss => p + normal(rng),
        ModelId::Poisson => poisson_inv(p, u(rng)),
        ModelId::Exponential => -(1.0 - u(rng)).ln() / p,
        ModelId::Geometric => geometric_inv(p, u(rng)),
        ModelId::Bernoulli => (u(rng) < p) as u8 as f64,
        ModelId::Binomial => binomial_inv(trials, p, u(rng)),
        ModelId::NegBin => negbin_inv(trials, p, u(rng)),
        ModelId::Variance => p * normal(rng),
        ModelId::MeanVar => p + p.abs() * normal(rng),
        ModelId::QuadraticRegression => {
            let x = normal(rng);
            out.push(x);
            p * x + normal(rng)
        }
    };
    out.push(v);
}

/// Walks a discrete CDF from `k = 0` with `pmf(k+1) = pmf(k)·ratio(k)`.
fn walk_cdf(u: f64, p0: f64, ratio: impl Fn(f64) -> f64, max_k: f64) -> f64 {
    let mut k = 0.0;
    let mut pmf = p0;
    let mut cdf = pmf;
    while u > cdf && k < max_k {
        pmf *= ratio(k);
        k += 1.0;
        cdf += pmf;
        if pmf == 0.0 && cdf < u {
            // the remaining mass is below rounding; stop at the current k
            break;
        }
    }
    k
}

fn poisson_inv(lambda: f64, u: f64) -> f64 {
    walk_cdf(u, (-lambda).exp(), |k| lambda / (k + 1.0), f64::INFINITY)
}

fn geometric_inv(p: f64, u: f64) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    ((1.0 - u).ln() / (1.0 - p).ln()).ceil().max(1.0)
}

fn binomial_inv(trials: u32, p: f64, u: f64) -> f64 {
    let m = trials as f64;
    if p >= 1.0 {
        return m;
    }
    walk_cdf(u, (1.0 - p).powf(m), |k| (m - k) / (k + 1.0) * p / (1.0 - p), m)
}

/// Failures before the `trials`-th success.
fn negbin_inv(trials: u32, p: f64, u: f64) -> f64 {
    let r = trials as f64;
    walk_cdf(u, p.powf(r), |k| (k + r) / (k + 1.0) * (1.0 - p), f64::INFINITY)
}

/// Draws a series from `spec`. The result is reproducible for a given seed.
pub fn simulate(spec: &SimSpec) -> Result<Series> {
    if spec.n == 0 || spec.dim == 0 || spec.segment_len == 0 {
        return Err(Error::Config("length, dimension and segment length must be positive".into()));
    }
    if spec.model == ModelId::QuadraticRegression && spec.dim != 1 {
        return Err(Error::Config("quadratic-regression series have a single (x, y) pair".into()));
    }
    if matches!(spec.model, ModelId::Binomial | ModelId::NegBin) && spec.trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    for p in spec.params {
        check_param(spec.model, p)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let width = if spec.model == ModelId::QuadraticRegression { 2 } else { spec.dim };
    let mut values = Vec::with_capacity(spec.n * width);
    for i in 0..spec.n {
        let p = spec.params[(i / spec.segment_len) % 2];
        if spec.model == ModelId::QuadraticRegression {
            draw(spec.model, p, spec.trials, &mut rng, &mut values);
        } else {
            for _ in 0..spec.dim {
                draw(spec.model, p, spec.trials, &mut rng, &mut values);
            }
        }
    }
    Series::new(spec.n, width, values)
}

/// Increasing Gaussian series for which no pruning rule can discard any
/// index:
///
/// ```text
/// y_t = √(β/n)·(√(n−1) − √(t(n−t)) + √((t−1)(n−t+1))).
/// ```
///
/// The inner minima tie at `t = n` for the unit-variance cost
/// `(t−s)θ²/2 − θS_st` when the run uses penalty `β/2`.
pub fn worstcase_gauss(n: usize, beta: f64) -> Result<Series> {
    if n < 2 || !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Config(format!("need n >= 2 and beta > 0, got n = {n}, beta = {beta}")));
    }
    let nf = n as f64;
    let k = (beta / nf).sqrt();
    let values = (1..=n)
        .map(|t| {
            let t = t as f64;
            k * ((nf - 1.0).sqrt() - (t * (nf - t)).sqrt() + ((t - 1.0) * (nf - t + 1.0)).sqrt())
        })
        .collect();
    Ok(Series::univariate(values))
}

/// Worst-case series for a scalar family with overall mean statistic `y`:
/// for each `t`, the running mean `s_t` is the root below `y` of
///
/// ```text
/// g_t(x) = (t/n)·D*(x) + ((n−t)/n)·D*((n·y − t·x)/(n−t)) = β/n + D*(y),
/// ```
///
/// and the statistics are `t·s_t − (t−1)·s_{t−1}`. The series is returned on
/// the raw scale of `model` (square roots for the variance model, times
/// `trials` for binomial and negbin), so running `model` with penalty `β`
/// prunes nothing.
pub fn worstcase_expfam(model: &ModelFamily, n: usize, y: f64, beta: f64) -> Result<Series> {
    let id = model.id();
    if !id.is_scalar() || model.columns() != 1 {
        return Err(Error::Unsupported(format!(
            "worst-case construction needs a single-column scalar model, got {id}"
        )));
    }
    if n < 2 || !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Config(format!("need n >= 2 and beta > 0, got n = {n}, beta = {beta}")));
    }
    let iv = id.interval();
    if iv.locate(y) != Location::Inside {
        return Err(Error::Domain {
            coord: 0,
            value: y,
            lower: iv.lower,
            upper: iv.upper,
        });
    }
    let nf = n as f64;
    let target = beta / nf + id.dstar1(y);
    let mut means = vec![0.0; n + 1];
    means[n] = y;
    for t in 1..n {
        let tf = t as f64;
        let g = |x: f64| {
            let z = (nf * y - tf * x) / (nf - tf);
            tf / nf * id.dstar1(x) + (nf - tf) / nf * id.dstar1(z)
        };
        // left end of the domain of g_t below y
        let mut lo = if iv.upper.is_finite() {
            iv.lower.max((nf * y - (nf - tf) * iv.upper) / tf)
        } else {
            iv.lower
        };
        if lo == f64::NEG_INFINITY {
            let mut step = 1.0;
            lo = y - step;
            while g(lo) < target {
                step *= 2.0;
                lo = y - step;
                if !lo.is_finite() {
                    return Err(Error::Solve {
                        t,
                        detail: "no bracket found below the mean".into(),
                    });
                }
            }
        }
        let g_lo = g(lo);
        if g_lo.is_nan() {
            return Err(Error::Solve {
                t,
                detail: format!("g_t is undefined at the bracket end {lo}"),
            });
        }
        if g_lo < target {
            return Err(Error::InfeasiblePenalty {
                beta,
                bound: nf * (g_lo - id.dstar1(y)),
            });
        }
        let mut hi = y;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        means[t] = 0.5 * (lo + hi);
    }
    let mut values = Vec::with_capacity(n);
    for t in 1..=n {
        let tf = t as f64;
        let stat = tf * means[t] - (tf - 1.0) * means[t - 1];
        let raw = match id {
            ModelId::Variance => stat.max(0.0).sqrt(),
            ModelId::Binomial | ModelId::NegBin => stat * model.trials(),
            _ => stat,
        };
        values.push(raw);
    }
    Ok(Series::univariate(values))
}
