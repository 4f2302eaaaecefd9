//! Cost models: log-partition functions, mean maps and the conjugate term `D*`.
//!
//! Every exponential-family model is described by its sufficient statistic,
//! its natural parameter domain and the three functions `A`, `(∇A)⁻¹` and
//! `D*(x) = x·(∇A)⁻¹(x) − A((∇A)⁻¹(x))`. The minimum of the segment cost
//! `len·A(θ) − θ·S` is `−len·D*(S/len)`.
//!
//! Multi-column series are modelled with independent coordinates, so vector
//! quantities are sums of per-coordinate terms. The mean-and-variance model
//! uses the pair `(y, y²)` per column.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::series::Series;

/// Absolute tolerance used when classifying a point against a domain bound.
pub const DOMAIN_EPS: f64 = 1e-12;

/// Identifier of a cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelId {
    Gauss,
    Poisson,
    Exponential,
    Geometric,
    Bernoulli,
    Binomial,
    NegBin,
    Variance,
    MeanVar,
    QuadraticRegression,
}

impl ModelId {
    pub const ALL: [ModelId; 10] = [
        ModelId::Gauss,
        ModelId::Poisson,
        ModelId::Exponential,
        ModelId::Geometric,
        ModelId::Bernoulli,
        ModelId::Binomial,
        ModelId::NegBin,
        ModelId::Variance,
        ModelId::MeanVar,
        ModelId::QuadraticRegression,
    ];

    /// The univariate exponential families, one statistic per column.
    pub const SCALAR: [ModelId; 8] = [
        ModelId::Gauss,
        ModelId::Poisson,
        ModelId::Exponential,
        ModelId::Geometric,
        ModelId::Bernoulli,
        ModelId::Binomial,
        ModelId::NegBin,
        ModelId::Variance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Gauss => "gauss",
            ModelId::Poisson => "poisson",
            ModelId::Exponential => "exponential",
            ModelId::Geometric => "geometric",
            ModelId::Bernoulli => "bernoulli",
            ModelId::Binomial => "binomial",
            ModelId::NegBin => "negbin",
            ModelId::Variance => "variance",
            ModelId::MeanVar => "meanvar",
            ModelId::QuadraticRegression => "quadratic-regression",
        }
    }

    /// Multiplicative factor applied to `a·log n` penalties.
    pub fn penalty_scale(self) -> f64 {
        match self {
            ModelId::Gauss | ModelId::Variance => 1.0,
            ModelId::Poisson | ModelId::Geometric | ModelId::Bernoulli => 2.0 / 3.0,
            ModelId::Exponential => 0.75,
            ModelId::Binomial => 1.0 / 6.0,
            ModelId::NegBin => 0.1,
            ModelId::MeanVar | ModelId::QuadraticRegression => 1.0,
        }
    }

    /// True for the models with one statistic coordinate per column.
    pub fn is_scalar(self) -> bool {
        !matches!(self, ModelId::MeanVar | ModelId::QuadraticRegression)
    }

    /// Number of statistic coordinates contributed by one column.
    fn block_dim(self) -> usize {
        match self {
            ModelId::MeanVar => 2,
            ModelId::QuadraticRegression => 5,
            _ => 1,
        }
    }

    /// Open interval of admissible means for a scalar family.
    pub fn interval(self) -> Interval {
        match self {
            ModelId::Gauss => Interval::new(f64::NEG_INFINITY, f64::INFINITY),
            ModelId::Poisson | ModelId::Exponential | ModelId::NegBin | ModelId::Variance => {
                Interval::new(0.0, f64::INFINITY)
            }
            ModelId::Geometric => Interval::new(1.0, f64::INFINITY),
            ModelId::Bernoulli | ModelId::Binomial => Interval::new(0.0, 1.0),
            ModelId::MeanVar | ModelId::QuadraticRegression => {
                Interval::new(f64::NEG_INFINITY, f64::INFINITY)
            }
        }
    }

    /// Log-partition function of a scalar family; `+∞` outside the natural domain.
    pub fn log_partition1(self, theta: f64) -> f64 {
        if !self.natural_contains1(theta) {
            return f64::INFINITY;
        }
        match self {
            ModelId::Gauss => 0.5 * theta * theta,
            ModelId::Exponential => -(-theta).ln(),
            ModelId::Poisson => theta.exp(),
            ModelId::Geometric => -(-theta).exp_m1().ln(),
            ModelId::Bernoulli | ModelId::Binomial => softplus(theta),
            ModelId::NegBin => -(-theta.exp()).ln_1p(),
            ModelId::Variance => -0.5 * (-2.0 * theta).ln(),
            _ => f64::NAN,
        }
    }

    /// Mean map `∇A` of a scalar family.
    pub fn grad_a1(self, theta: f64) -> f64 {
        match self {
            ModelId::Gauss => theta,
            ModelId::Exponential => -1.0 / theta,
            ModelId::Poisson => theta.exp(),
            ModelId::Geometric => -1.0 / theta.exp_m1(),
            ModelId::Bernoulli | ModelId::Binomial => 1.0 / (1.0 + (-theta).exp()),
            ModelId::NegBin => 1.0 / (-theta).exp_m1(),
            ModelId::Variance => -0.5 / theta,
            _ => f64::NAN,
        }
    }

    /// Inverse mean map `(∇A)⁻¹` of a scalar family (no domain check).
    pub fn grad_a_inv1(self, x: f64) -> f64 {
        match self {
            ModelId::Gauss => x,
            ModelId::Exponential => -1.0 / x,
            ModelId::Poisson => x.ln(),
            ModelId::Geometric => ((x - 1.0) / x).ln(),
            ModelId::Bernoulli | ModelId::Binomial => (x / (1.0 - x)).ln(),
            ModelId::NegBin => (x / (1.0 + x)).ln(),
            ModelId::Variance => -0.5 / x,
            _ => f64::NAN,
        }
    }

    pub fn natural_contains1(self, theta: f64) -> bool {
        if !theta.is_finite() {
            return false;
        }
        match self {
            ModelId::Exponential | ModelId::Geometric | ModelId::NegBin | ModelId::Variance => {
                theta < 0.0
            }
            _ => true,
        }
    }

    /// `D*` of a scalar family on the closure of its mean domain.
    ///
    /// Boundary points return the analytic limit, which is `+∞` for the
    /// exponential and variance models at zero. Points outside the closure
    /// return NaN.
    pub fn dstar1(self, x: f64) -> f64 {
        let iv = self.interval();
        match iv.locate(x) {
            Location::Outside => f64::NAN,
            Location::Lower => self.dstar_at_bound(iv.lower),
            Location::Upper => self.dstar_at_bound(iv.upper),
            Location::Inside => match self {
                ModelId::Gauss => 0.5 * x * x,
                ModelId::Exponential => -x.ln() - 1.0,
                ModelId::Poisson => x * (x.ln() - 1.0),
                ModelId::Geometric => xlogx(x - 1.0) - xlogx(x),
                ModelId::Bernoulli | ModelId::Binomial => xlogx(x) + xlogx(1.0 - x),
                ModelId::NegBin => xlogx(x) - (1.0 + x) * x.ln_1p(),
                ModelId::Variance => -0.5 * (x.ln() + 1.0),
                _ => f64::NAN,
            },
        }
    }

    fn dstar_at_bound(self, _bound: f64) -> f64 {
        match self {
            ModelId::Exponential | ModelId::Variance => f64::INFINITY,
            // x log x terms vanish at every finite bound of the other families
            _ => 0.0,
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model '{s}'")))
    }
}

fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Open interval `(lower, upper)`; infinite bounds are allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

/// Position of a point relative to an open interval, with [`DOMAIN_EPS`] slack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Lower,
    Upper,
    Outside,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Interval { lower, upper }
    }

    pub fn locate(&self, x: f64) -> Location {
        if x.is_nan() {
            return Location::Outside;
        }
        if self.lower.is_finite() && (x - self.lower).abs() <= DOMAIN_EPS {
            return Location::Lower;
        }
        if self.upper.is_finite() && (x - self.upper).abs() <= DOMAIN_EPS {
            return Location::Upper;
        }
        if x > self.lower && x < self.upper {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.locate(x) == Location::Inside
    }
}

/// A cost model bound to a number of series columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    id: ModelId,
    columns: usize,
    trials: f64,
    standardise: bool,
}

impl ModelFamily {
    /// Builds a model for series with `columns` columns. The regression model
    /// takes exactly two columns `(x, y)`.
    pub fn new(id: ModelId, columns: usize) -> Result<Self> {
        if columns == 0 {
            return Err(Error::Config("a model needs at least one column".into()));
        }
        if id == ModelId::QuadraticRegression && columns != 2 {
            return Err(Error::Config(
                "quadratic-regression expects two columns (x, y)".into(),
            ));
        }
        Ok(ModelFamily {
            id,
            columns,
            trials: 10.0,
            standardise: false,
        })
    }

    /// Single-series model (two columns for the regression model).
    pub fn univariate(id: ModelId) -> Self {
        let columns = if id == ModelId::QuadraticRegression { 2 } else { 1 };
        ModelFamily {
            id,
            columns,
            trials: 10.0,
            standardise: false,
        }
    }

    /// Sets the binomial trials / negative-binomial successes count used to
    /// normalise raw counts.
    pub fn with_trials(mut self, trials: f64) -> Result<Self> {
        if !(trials.is_finite() && trials > 0.0) {
            return Err(Error::Config(format!("trials must be positive, got {trials}")));
        }
        self.trials = trials;
        Ok(self)
    }

    /// Divide Gaussian data by a robust global estimate of the noise level.
    pub fn with_standardise(mut self, on: bool) -> Self {
        self.standardise = on;
        self
    }

    pub fn id(&self) -> ModelId {
        self.id
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn trials(&self) -> f64 {
        self.trials
    }

    pub fn penalty_scale(&self) -> f64 {
        self.id.penalty_scale()
    }

    fn blocks(&self) -> usize {
        if self.id == ModelId::QuadraticRegression {
            1
        } else {
            self.columns
        }
    }

    /// Dimension `d` of the sufficient statistic.
    pub fn stat_dim(&self) -> usize {
        self.blocks() * self.id.block_dim()
    }

    /// Per-coordinate mean intervals. For meanvar the second coordinate of
    /// each pair is `E[y²]`; the joint constraint `v > u²` applies on top.
    pub fn mean_domain(&self) -> Vec<Interval> {
        match self.id {
            ModelId::MeanVar => (0..self.columns)
                .flat_map(|_| {
                    [
                        Interval::new(f64::NEG_INFINITY, f64::INFINITY),
                        Interval::new(0.0, f64::INFINITY),
                    ]
                })
                .collect(),
            ModelId::QuadraticRegression => {
                let all = Interval::new(f64::NEG_INFINITY, f64::INFINITY);
                let pos = Interval::new(0.0, f64::INFINITY);
                vec![pos, all, all, all, pos]
            }
            id => vec![id.interval(); self.columns],
        }
    }

    /// True when some segments have no finite minimum cost.
    pub fn may_degenerate(&self) -> bool {
        matches!(
            self.id,
            ModelId::Exponential | ModelId::Variance | ModelId::MeanVar
        )
    }

    fn require_exp_family(&self, what: &str) -> Result<()> {
        if self.id == ModelId::QuadraticRegression {
            Err(Error::Unsupported(format!(
                "{what} is not defined for quadratic-regression"
            )))
        } else {
            Ok(())
        }
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.stat_dim() {
            return Err(Error::Index(format!(
                "expected a vector of length {}, got {}",
                self.stat_dim(),
                x.len()
            )));
        }
        Ok(())
    }

    /// Maps one observation row to its sufficient statistic.
    pub fn statistics(&self, row: &[f64], out: &mut [f64]) {
        match self.id {
            ModelId::Variance => {
                for (o, &y) in out.iter_mut().zip(row) {
                    *o = y * y;
                }
            }
            ModelId::MeanVar => {
                for (j, &y) in row.iter().enumerate() {
                    out[2 * j] = y;
                    out[2 * j + 1] = y * y;
                }
            }
            ModelId::QuadraticRegression => {
                let (x, y) = (row[0], row[1]);
                out.copy_from_slice(&[x * x, x, x * y, y, y * y]);
            }
            _ => out.copy_from_slice(row),
        }
    }

    /// Normalises and validates a series, returning the row-major `n × d`
    /// matrix of sufficient statistics.
    pub fn prepare(&self, series: &Series) -> Result<Vec<f64>> {
        if series.dim() != self.columns {
            return Err(Error::Config(format!(
                "model {} expects {} column(s), series has {}",
                self.id,
                self.columns,
                series.dim()
            )));
        }
        let p = self.columns;
        let mut scale = vec![1.0; p];
        match self.id {
            ModelId::Binomial | ModelId::NegBin => scale.fill(self.trials),
            ModelId::Gauss if self.standardise => {
                for (j, s) in scale.iter_mut().enumerate() {
                    *s = robust_sd(&series.column(j));
                }
            }
            _ => {}
        }
        let support = self.support();
        let d = self.stat_dim();
        let mut stats = vec![0.0; series.len() * d];
        let mut row = vec![0.0; p];
        for (i, raw) in series.rows().enumerate() {
            for j in 0..p {
                let y = raw[j] / scale[j];
                let ok = y.is_finite()
                    && y >= support.lower - DOMAIN_EPS
                    && y <= support.upper + DOMAIN_EPS;
                if !ok {
                    return Err(Error::Domain {
                        coord: j,
                        value: raw[j],
                        lower: support.lower,
                        upper: support.upper,
                    });
                }
                row[j] = y;
            }
            self.statistics(&row, &mut stats[i * d..(i + 1) * d]);
        }
        Ok(stats)
    }

    /// Closed range of admissible (normalised) observations.
    fn support(&self) -> Interval {
        match self.id {
            ModelId::Poisson | ModelId::Exponential | ModelId::NegBin => {
                Interval::new(0.0, f64::INFINITY)
            }
            ModelId::Geometric => Interval::new(1.0, f64::INFINITY),
            ModelId::Bernoulli | ModelId::Binomial => Interval::new(0.0, 1.0),
            _ => Interval::new(f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    fn domain_error(&self, x: &[f64]) -> Error {
        if self.id == ModelId::MeanVar {
            for j in 0..self.columns {
                let (u, v) = (x[2 * j], x[2 * j + 1]);
                if !meanvar_inside(u, v) {
                    return Error::Domain {
                        coord: 2 * j + 1,
                        value: v,
                        lower: u * u,
                        upper: f64::INFINITY,
                    };
                }
            }
        } else {
            let iv = self.id.interval();
            for (j, &xj) in x.iter().enumerate() {
                if !iv.contains(xj) {
                    return Error::Domain {
                        coord: j,
                        value: xj,
                        lower: iv.lower,
                        upper: iv.upper,
                    };
                }
            }
        }
        Error::Domain {
            coord: 0,
            value: f64::NAN,
            lower: f64::NAN,
            upper: f64::NAN,
        }
    }

    /// True when `x` lies strictly inside the mean domain.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        match self.id {
            ModelId::MeanVar => x.chunks_exact(2).all(|c| meanvar_inside(c[0], c[1])),
            ModelId::QuadraticRegression => x.iter().all(|v| v.is_finite()),
            id => {
                let iv = id.interval();
                x.iter().all(|&v| iv.contains(v))
            }
        }
    }

    /// `D*(x)` for `x` strictly inside the mean domain.
    pub fn dstar(&self, x: &[f64]) -> Result<f64> {
        self.require_exp_family("D*")?;
        self.check_len(x)?;
        if !self.in_domain(x) {
            return Err(self.domain_error(x));
        }
        Ok(self.dstar_closure_unchecked(x))
    }

    /// `D*(x)` on the closure of the mean domain; boundary points give the
    /// analytic limit, possibly `+∞`.
    pub fn dstar_closure(&self, x: &[f64]) -> Result<f64> {
        self.require_exp_family("D*")?;
        self.check_len(x)?;
        let v = self.dstar_closure_unchecked(x);
        if v.is_nan() {
            return Err(self.domain_error(x));
        }
        Ok(v)
    }

    /// Same as [`dstar_closure`](Self::dstar_closure) but NaN signals a point
    /// outside the closure. Used on hot paths.
    pub fn dstar_closure_unchecked(&self, x: &[f64]) -> f64 {
        match self.id {
            ModelId::MeanVar => x
                .chunks_exact(2)
                .map(|c| meanvar_dstar(c[0], c[1]))
                .sum(),
            ModelId::QuadraticRegression => f64::NAN,
            id => x.iter().map(|&v| id.dstar1(v)).sum(),
        }
    }

    /// `(∇A)⁻¹(x)` for `x` strictly inside the mean domain.
    pub fn grad_a_inv(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.require_exp_family("(∇A)⁻¹")?;
        self.check_len(x)?;
        if !self.in_domain(x) {
            return Err(self.domain_error(x));
        }
        Ok(match self.id {
            ModelId::MeanVar => x
                .chunks_exact(2)
                .flat_map(|c| {
                    let w = c[1] - c[0] * c[0];
                    [c[0] / w, -0.5 / w]
                })
                .collect(),
            id => x.iter().map(|&v| id.grad_a_inv1(v)).collect(),
        })
    }

    /// True when `θ` lies in the natural parameter domain.
    pub fn natural_contains(&self, theta: &[f64]) -> bool {
        if theta.len() != self.stat_dim() {
            return false;
        }
        match self.id {
            ModelId::MeanVar => theta
                .chunks_exact(2)
                .all(|c| c[0].is_finite() && c[1].is_finite() && c[1] < 0.0),
            ModelId::QuadraticRegression => false,
            id => theta.iter().all(|&t| id.natural_contains1(t)),
        }
    }

    fn check_natural(&self, theta: &[f64]) -> Result<()> {
        self.require_exp_family("A")?;
        self.check_len(theta)?;
        if self.natural_contains(theta) {
            return Ok(());
        }
        let coord = theta
            .iter()
            .position(|t| !t.is_finite() || *t >= 0.0)
            .unwrap_or(0);
        Err(Error::Domain {
            coord,
            value: theta[coord],
            lower: f64::NEG_INFINITY,
            upper: 0.0,
        })
    }

    /// Log-partition function `A(θ)`.
    pub fn log_partition(&self, theta: &[f64]) -> Result<f64> {
        self.check_natural(theta)?;
        Ok(match self.id {
            ModelId::MeanVar => theta
                .chunks_exact(2)
                .map(|c| -c[0] * c[0] / (4.0 * c[1]) - 0.5 * (-2.0 * c[1]).ln())
                .sum(),
            id => theta.iter().map(|&t| id.log_partition1(t)).sum(),
        })
    }

    /// Mean map `∇A(θ)`.
    pub fn grad_a(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_natural(theta)?;
        Ok(match self.id {
            ModelId::MeanVar => theta
                .chunks_exact(2)
                .flat_map(|c| meanvar_grad_a(c[0], c[1]))
                .collect(),
            id => theta.iter().map(|&t| id.grad_a1(t)).collect(),
        })
    }

    /// Segment cost `len·A(θ) − θ·S` for a statistic sum `S`.
    pub fn segment_cost(&self, theta: &[f64], sum: &[f64], len: usize) -> Result<f64> {
        self.check_len(sum)?;
        let a = self.log_partition(theta)?;
        let dot: f64 = theta.iter().zip(sum).map(|(t, s)| t * s).sum();
        Ok(len as f64 * a - dot)
    }

    /// Minimum over `θ` of the cost of a segment of length `len` whose mean
    /// statistic is `mean`.
    pub fn segment_cost_min(&self, mean: &[f64], len: usize) -> Result<f64> {
        self.check_len(mean)?;
        if len == 0 {
            return Err(Error::EmptySegment(0));
        }
        let v = self.segment_cost_min_unchecked(mean, len as f64);
        if v.is_nan() {
            return Err(self.domain_error(mean));
        }
        if v == f64::INFINITY {
            return Err(Error::DegenerateSegment(format!(
                "no finite minimum for mean statistic {mean:?}"
            )));
        }
        Ok(v)
    }

    /// Hot-path minimum segment cost; `+∞` for degenerate segments (whose
    /// true infimum is `−∞`) and NaN outside the closure of the mean domain.
    pub fn segment_cost_min_unchecked(&self, mean: &[f64], len: f64) -> f64 {
        match self.id {
            ModelId::QuadraticRegression => len * regression_min_mean(mean),
            _ => {
                // an infinite D* means the cost is unbounded below; such
                // segments are excluded by giving them an infinite cost
                let d = self.dstar_closure_unchecked(mean);
                if d == f64::INFINITY {
                    f64::INFINITY
                } else {
                    -len * d
                }
            }
        }
    }

    /// Largest `λ ≥ 0` such that `base + λ'·dir` stays strictly inside the
    /// mean domain for every `λ' ∈ [0, λ)`. Returns `+∞` when unbounded and 0
    /// when `base` already sits on the boundary with `dir` pointing outward.
    pub fn max_step(&self, base: &[f64], dir: &[f64]) -> f64 {
        match self.id {
            ModelId::MeanVar => base
                .chunks_exact(2)
                .zip(dir.chunks_exact(2))
                .map(|(b, d)| meanvar_max_step(b[0], b[1], d[0], d[1]))
                .fold(f64::INFINITY, f64::min),
            ModelId::QuadraticRegression => f64::INFINITY,
            id => {
                let iv = id.interval();
                base.iter()
                    .zip(dir)
                    .map(|(&b, &d)| interval_max_step(iv, b, d))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// Step bound along one scalar coordinate.
pub fn interval_max_step(iv: Interval, base: f64, dir: f64) -> f64 {
    if dir < 0.0 && iv.lower.is_finite() {
        ((base - iv.lower) / -dir).max(0.0)
    } else if dir > 0.0 && iv.upper.is_finite() {
        ((iv.upper - base) / dir).max(0.0)
    } else {
        f64::INFINITY
    }
}

/// Threshold under which `v − u²` is treated as zero.
pub fn meanvar_floor(v: f64) -> f64 {
    DOMAIN_EPS * v.abs().max(1.0)
}

fn meanvar_inside(u: f64, v: f64) -> bool {
    let w = v - u * u;
    w.is_finite() && w > meanvar_floor(v)
}

/// `D*(u, v) = −½(1 + log(v − u²))`, `+∞` on the degenerate boundary.
pub fn meanvar_dstar(u: f64, v: f64) -> f64 {
    let w = v - u * u;
    if w.is_nan() {
        f64::NAN
    } else if w <= meanvar_floor(v) {
        if w < -meanvar_floor(v) {
            f64::NAN
        } else {
            f64::INFINITY
        }
    } else {
        -0.5 * (1.0 + w.ln())
    }
}

pub fn meanvar_grad_a(t1: f64, t2: f64) -> [f64; 2] {
    let m = -t1 / (2.0 * t2);
    [m, m * m - 0.5 / t2]
}

/// Largest step keeping `(v + λb) − (u + λa)² > 0`.
pub fn meanvar_max_step(u: f64, v: f64, a: f64, b: f64) -> f64 {
    let w0 = v - u * u;
    if w0 <= meanvar_floor(v) {
        return 0.0;
    }
    let c = b - 2.0 * u * a;
    let a2 = a * a;
    if a2 == 0.0 {
        return if c < 0.0 { w0 / -c } else { f64::INFINITY };
    }
    let disc = (c * c + 4.0 * a2 * w0).sqrt();
    if c >= 0.0 {
        (c + disc) / (2.0 * a2)
    } else {
        2.0 * w0 / (disc - c)
    }
}

/// Per-point minimum of the least-squares regression cost given mean
/// statistics `(x², x, xy, y, y²)`.
pub(crate) fn regression_min_mean(m: &[f64]) -> f64 {
    let vx = m[0] - m[1] * m[1];
    let vy = m[4] - m[3] * m[3];
    let cxy = m[2] - m[1] * m[3];
    let v = if vx > DOMAIN_EPS * m[0].abs().max(1.0) {
        vy - cxy * cxy / vx
    } else {
        vy
    };
    v.max(0.0)
}

/// Robust noise scale: MAD of first differences divided by √2.
fn robust_sd(y: &[f64]) -> f64 {
    if y.len() < 3 {
        return 1.0;
    }
    let mut d: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median(&mut d);
    let mut dev: Vec<f64> = d.iter().map(|v| (v - med).abs()).collect();
    let sd = 1.4826 * median(&mut dev) / std::f64::consts::SQRT_2;
    if sd > 0.0 && sd.is_finite() {
        sd
    } else {
        1.0
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Relative determinant below which a quadratic form counts as singular.
const CONVEX_RTOL: f64 = 1e-12;

/// Coefficients of `q(θ₁,θ₂) = Aθ₁² + 2Bθ₁θ₂ + Cθ₂² + 2Dθ₁ + 2Eθ₂ + F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl QuadraticCoeffs {
    /// Inner cost of the regression model for a segment with statistic sums
    /// `(Σx², Σx, Σxy, Σy, Σy²)` and length `len`; `offset` is `Q_s + β`.
    pub fn from_regression_sums(sums: &[f64], len: f64, offset: f64) -> Self {
        QuadraticCoeffs {
            a: sums[0],
            b: sums[1],
            c: len,
            d: -sums[2],
            e: -sums[3],
            f: sums[4] + offset,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }

    /// Positive definite with a determinant clear of rounding noise: a form
    /// built from a single point has `det = 0` exactly, but its computed
    /// determinant is a few ulps of `a·c` either way.
    pub fn is_strictly_convex(&self) -> bool {
        self.a > 0.0 && self.c > 0.0 && self.det() > CONVEX_RTOL * self.a * self.c
    }

    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        self.a * t1 * t1
            + 2.0 * self.b * t1 * t2
            + self.c * t2 * t2
            + 2.0 * self.d * t1
            + 2.0 * self.e * t2
            + self.f
    }

    /// Minimum value over `θ`; `-∞` when the form is not strictly convex.
    pub fn min_value(&self) -> f64 {
        self.min_value_with_error().0
    }

    /// Minimum value together with a bound on its rounding error, which
    /// grows with the condition number of the quadratic part.
    pub fn min_value_with_error(&self) -> (f64, f64) {
        if !self.is_strictly_convex() {
            return (f64::NEG_INFINITY, 0.0);
        }
        let det = self.det();
        let quad = (self.c * self.d * self.d - 2.0 * self.b * self.d * self.e + self.a * self.e * self.e) / det;
        let trace = self.a + self.c;
        let cond = trace * trace / det;
        let err = 16.0 * f64::EPSILON * (1.0 + cond) * (self.f.abs() + quad.abs());
        (self.f - quad, err)
    }

    /// `(1 + μ)·f_s − μ·f_r`.
    pub fn combine(fs: &Self, fr: &Self, mu: f64) -> Self {
        let k = 1.0 + mu;
        QuadraticCoeffs {
            a: k * fs.a - mu * fr.a,
            b: k * fs.b - mu * fr.b,
            c: k * fs.c - mu * fr.c,
            d: k * fs.d - mu * fr.d,
            e: k * fs.e - mu * fr.e,
            f: k * fs.f - mu * fr.f,
        }
    }
}

/// Dual of the one-constraint pruning problem for quadratic inner costs.
pub fn quadratic_dual(fs: &QuadraticCoeffs, fr: &QuadraticCoeffs, mu: f64) -> f64 {
    QuadraticCoeffs::combine(fs, fr, mu).min_value()
}

/// Largest `μ` for which `(1 + μ)f_s − μf_r` stays strictly convex.
pub fn quadratic_mu_max(fs: &QuadraticCoeffs, fr: &QuadraticCoeffs) -> Result<f64> {
    let w1 = fs.det();
    let w2 = fr.det();
    if !(fs.is_strictly_convex() && fr.is_strictly_convex()) {
        return Err(Error::Config("quadratic forms must be strictly convex".into()));
    }
    if (w1 - w2).abs() <= 1e-12 * w1.max(w2) {
        return Err(Error::TieBreakUnsupported);
    }
    let delta = 0.5 * (fs.a * fr.c + fr.a * fs.c) - fs.b * fr.b;
    // det(μ) = (ω₁² − 2Δ + ω₂²)μ² + 2(ω₁² − Δ)μ + ω₁²
    let qa = w1 + w2 - 2.0 * delta;
    let qb = 2.0 * (w1 - delta);
    Ok(smallest_positive_root(qa, qb, w1))
}

/// Smallest strictly positive root of `a x² + b x + c`, or `+∞`.
pub fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    let mut best = f64::INFINITY;
    let mut keep = |r: f64| {
        if r.is_finite() && r > 0.0 && r < best {
            best = r;
        }
    };
    if a == 0.0 {
        if b != 0.0 {
            keep(-c / b);
        }
        return best;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return best;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q != 0.0 {
        keep(q / a);
        keep(c / q);
    } else {
        keep(0.0);
    }
    best
}
