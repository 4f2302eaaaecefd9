//! Dual functions, decision functions and the pruning tests built on them.
//!
//! For a candidate `s` at time `t` and constraint indices `r ∈ R`, the
//! decision function is
//!
//! ```text
//! 𝔻(x) = −D*(S̄_st + Σ x_r ΔS̄_rst) − (Q̄_st + Σ x_r ΔQ̄_rst),   x ≥ 0,
//! ```
//!
//! and `s` can be pruned as soon as `𝔻(x) > 0` at any feasible `x`. The
//! dual value itself is recovered as
//! `D = Q_t + β + (t−s)·𝔻(x)/(1 + Σ ψ_rs x_r)`.

mod ascent;
pub(crate) mod closed;
mod multi;
pub(crate) mod quadratic;
mod single;

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub use ascent::{quasi_newton_max, AscentResult};
pub use closed::{gauss_closed_max, meanvar_closed, meanvar_closed_max, ClosedMax};
pub use multi::{
    decision_multi, decision_multi_critical, dual_multi, random_decision, ConstraintSelection,
    DecisionData,
};
pub use quadratic::{regression_dual_max, regression_random_dual};
pub use single::{
    decision_1d, dual_1c, exact_max_1d, exact_test_1d, mu_max_1c, ExactMax, Scalar1d,
};

pub(crate) use ascent::maximize;

/// Relative slack under which a dual gap is not trusted to be positive.
pub const PRUNE_SLACK: f64 = 1e-10;

/// Smallest dual gap `D − (Q_t + β)` that triggers pruning.
#[inline]
pub fn prune_margin(level: f64) -> f64 {
    PRUNE_SLACK * level.abs().max(1.0)
}

/// How a dual function is evaluated when testing a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Closed-form maximum of the one-constraint decision function.
    Exact1d,
    /// Evaluation at zero, identical to the PELT rule.
    Zero,
    /// Evaluation at a uniformly drawn multiplier.
    Random,
    /// Projected quasi-Newton ascent.
    QuasiNewton,
    /// Closed forms of the mean-and-variance model (one or two constraints).
    MeanVarClosed,
    /// Closed-form maximum of the Gaussian one-constraint dual.
    GaussClosed,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Exact1d,
        Strategy::Zero,
        Strategy::Random,
        Strategy::QuasiNewton,
        Strategy::MeanVarClosed,
        Strategy::GaussClosed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Exact1d => "exact1d",
            Strategy::Zero => "zero",
            Strategy::Random => "random",
            Strategy::QuasiNewton => "qn",
            Strategy::MeanVarClosed => "meanvar",
            Strategy::GaussClosed => "gauss",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Strategy::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy '{s}'")))
    }
}

/// Strategy descriptor for dual-based pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEvalPlan {
    pub strategy: Strategy,
    pub rng_seed: u64,
    pub qn_max_iters: usize,
    pub qn_tol: f64,
    /// Number of constraint indices per test (1 or 2).
    pub constraints: usize,
    /// Draw constraint indices uniformly among surviving indices below `s`
    /// instead of taking the closest ones.
    pub random_constraints: bool,
}

impl Default for DualEvalPlan {
    fn default() -> Self {
        DualEvalPlan {
            strategy: Strategy::Exact1d,
            rng_seed: 0,
            qn_max_iters: 20,
            qn_tol: 1e-8,
            constraints: 1,
            random_constraints: false,
        }
    }
}

impl DualEvalPlan {
    pub fn new(strategy: Strategy) -> Self {
        DualEvalPlan {
            strategy,
            ..Default::default()
        }
    }

    pub fn with_constraints(mut self, q: usize) -> Self {
        self.constraints = q;
        self
    }
}

/// Bounds of the feasible multiplier range for one constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualDomain {
    pub x_max: f64,
    pub mu_max: f64,
    /// False when the range reduces to the single point zero.
    pub feasible: bool,
}

impl DualDomain {
    pub fn from_x_max(x_max: f64) -> Self {
        let mu_max = if x_max.is_infinite() {
            1.0
        } else {
            x_max / (1.0 + x_max)
        };
        DualDomain {
            x_max,
            mu_max,
            feasible: x_max > 0.0,
        }
    }
}

/// `x = μ/(1−μ)`.
#[inline]
pub fn mu_to_x(mu: f64) -> f64 {
    mu / (1.0 - mu)
}

/// `μ = x/(1+x)`.
#[inline]
pub fn x_to_mu(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        x / (1.0 + x)
    }
}
