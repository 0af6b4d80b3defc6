//! Parametric displacement laws.
//!
//! Two families are supported, both on the positive half-line with an
//! optional exponential left tail mixed in:
//!
//! * regularly varying: `S(x) = min(1, L(x) x^{-r})`,
//! * semi-exponential: `S(x) = min(1, a(x) exp(-L(x) x^r))` with `0 < r < 1`,
//!
//! where `S(x) = P(X > x)` and the slowly varying factors are
//! `c (1 + ln(1 + x))^beta`. The laws are exact, so quantiles and the
//! normalizing sequences built on them can be solved to machine precision.
//! All evaluations go through `ln S` on the variable `t = ln x`, which keeps
//! the far tail representable well past `f64::MAX`.

use rand::Rng;
use rand_distr::Open01;
use serde::{Deserialize, Serialize};

use crate::roots;

/// `max_{x>0} x / ((1 + x)(1 + ln(1 + x)))`.
///
/// `L(x) x^{-r}` is nonincreasing on `(0, inf)` iff `beta * PHI_MAX <= r`.
pub const PHI_MAX: f64 = 0.317_844_432_899_372_7;

/// Tolerance on `ln S` when a quantile is found by bisection.
const LOG_TOL: f64 = 1e-13;

fn ln_one_plus_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `L(x) = c (1 + ln(1 + max(x, 0)))^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowlyVarying {
    #[serde(default = "default_scale")]
    pub c: f64,
    #[serde(default)]
    pub beta: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl Default for SlowlyVarying {
    fn default() -> Self {
        Self::ONE
    }
}

impl SlowlyVarying {
    pub const ONE: SlowlyVarying = SlowlyVarying { c: 1.0, beta: 0.0 };

    pub fn new(c: f64, beta: f64) -> Self {
        Self { c, beta }
    }

    pub fn constant(c: f64) -> Self {
        Self { c, beta: 0.0 }
    }

    pub fn is_constant(&self) -> bool {
        self.beta == 0.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ln_eval(x).exp()
    }

    pub fn ln_eval(&self, x: f64) -> f64 {
        if self.is_constant() {
            return self.c.ln();
        }
        self.c.ln() + self.beta * (1.0 + x.max(0.0).ln_1p()).ln()
    }

    /// `ln L(e^t)`.
    pub fn ln_eval_at_log(&self, t: f64) -> f64 {
        if self.is_constant() {
            return self.c.ln();
        }
        self.c.ln() + self.beta * (1.0 + ln_one_plus_exp(t)).ln()
    }
}

/// Right-tail family of a displacement law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailFamily {
    RegularlyVarying {
        slowly: SlowlyVarying,
        index: f64,
    },
    SemiExponential {
        prefactor: SlowlyVarying,
        slowly: SlowlyVarying,
        index: f64,
    },
}

/// Optional negative part: with probability `weight` the displacement is
/// `-E`, `E ~ Exp(rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LeftTail {
    #[default]
    None,
    Exponential { rate: f64, weight: f64 },
}

impl LeftTail {
    /// Probability of a negative displacement.
    pub fn weight(&self) -> f64 {
        match *self {
            LeftTail::None => 0.0,
            LeftTail::Exponential { weight, .. } => weight,
        }
    }
}

/// A complete displacement law for one particle type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailConfig", into = "TailConfig")]
pub struct TailSpec {
    pub family: TailFamily,
    pub left: LeftTail,
}

impl TailSpec {
    pub fn pareto(index: f64) -> Self {
        Self::regularly_varying(SlowlyVarying::ONE, index)
    }

    pub fn regularly_varying(slowly: SlowlyVarying, index: f64) -> Self {
        Self {
            family: TailFamily::RegularlyVarying { slowly, index },
            left: LeftTail::None,
        }
    }

    /// `exp(-x^r)` on the positive half-line.
    pub fn stretched_exponential(index: f64) -> Self {
        Self::semi_exponential(SlowlyVarying::ONE, SlowlyVarying::ONE, index)
    }

    pub fn semi_exponential(prefactor: SlowlyVarying, slowly: SlowlyVarying, index: f64) -> Self {
        Self {
            family: TailFamily::SemiExponential {
                prefactor,
                slowly,
                index,
            },
            left: LeftTail::None,
        }
    }

    pub fn with_left(mut self, left: LeftTail) -> Self {
        self.left = left;
        self
    }

    pub fn index(&self) -> f64 {
        match self.family {
            TailFamily::RegularlyVarying { index, .. } => index,
            TailFamily::SemiExponential { index, .. } => index,
        }
    }

    /// The slowly varying function `L` of either family.
    pub fn slowly(&self) -> SlowlyVarying {
        match self.family {
            TailFamily::RegularlyVarying { slowly, .. } => slowly,
            TailFamily::SemiExponential { slowly, .. } => slowly,
        }
    }

    pub fn is_regularly_varying(&self) -> bool {
        matches!(self.family, TailFamily::RegularlyVarying { .. })
    }

    pub fn is_semi_exponential(&self) -> bool {
        matches!(self.family, TailFamily::SemiExponential { .. })
    }

    /// Parameter problems. Empty when valid.
    pub fn violations(&self) -> Vec<TailIssue> {
        let mut out = Vec::new();
        match self.family {
            TailFamily::RegularlyVarying { slowly, index } => {
                if !(index.is_finite() && index > 0.0) {
                    out.push(TailIssue::Index(format!(
                        "regularly varying index r = {index} must be positive"
                    )));
                }
                check_slowly("L", slowly, &mut out);
                if slowly.beta > 0.0 && slowly.beta * PHI_MAX > index {
                    out.push(TailIssue::Parameter(format!(
                        "L exponent beta = {} too large for r = {index}: survival would not be monotone (need beta <= {:.6})",
                        slowly.beta,
                        index / PHI_MAX
                    )));
                }
            }
            TailFamily::SemiExponential {
                prefactor,
                slowly,
                index,
            } => {
                if !(index.is_finite() && index > 0.0 && index < 1.0) {
                    out.push(TailIssue::Index(format!(
                        "semi-exponential index r = {index} must lie in (0, 1)"
                    )));
                }
                check_slowly("L", slowly, &mut out);
                check_slowly("a", prefactor, &mut out);
                if slowly.beta < 0.0 {
                    out.push(TailIssue::Parameter(format!(
                        "semi-exponential L exponent beta = {} must be nonnegative",
                        slowly.beta
                    )));
                }
                if prefactor.beta > 0.0 {
                    out.push(TailIssue::Parameter(format!(
                        "semi-exponential a exponent beta = {} must be nonpositive",
                        prefactor.beta
                    )));
                }
            }
        }
        if let LeftTail::Exponential { rate, weight } = self.left {
            if !(rate.is_finite() && rate > 0.0) {
                out.push(TailIssue::Parameter(format!("left tail rate {rate} must be positive")));
            }
            if !(weight.is_finite() && (0.0..1.0).contains(&weight)) {
                out.push(TailIssue::Parameter(format!(
                    "left tail weight {weight} must lie in [0, 1)"
                )));
            }
        }
        out
    }

    /// `ln P(X > e^t | X >= 0)`, clamped at 0.
    pub fn ln_positive_survival_at_log(&self, t: f64) -> f64 {
        match self.family {
            TailFamily::RegularlyVarying { slowly, index } => {
                if t == f64::NEG_INFINITY {
                    return 0.0;
                }
                (slowly.ln_eval_at_log(t) - index * t).min(0.0)
            }
            TailFamily::SemiExponential {
                prefactor,
                slowly,
                index,
            } => {
                let power = if t == f64::NEG_INFINITY {
                    0.0
                } else {
                    (index * t).exp()
                };
                let decay = if power == 0.0 {
                    0.0
                } else {
                    slowly.ln_eval_at_log(t).exp() * power
                };
                (prefactor.ln_eval_at_log(t) - decay).min(0.0)
            }
        }
    }

    /// `ln P(X > x)`.
    pub fn ln_survival(&self, x: f64) -> f64 {
        if x < 0.0 {
            return self.survival(x).ln();
        }
        (1.0 - self.left.weight()).ln() + self.ln_positive_survival_at_log(x.ln())
    }

    /// `P(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x < 0.0 {
            return match self.left {
                LeftTail::None => 1.0,
                LeftTail::Exponential { rate, weight } => 1.0 - weight * (rate * x).exp(),
            };
        }
        (1.0 - self.left.weight()) * self.ln_positive_survival_at_log(x.ln()).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        1.0 - self.survival(x)
    }

    /// `sup { x : P(X > x) >= p }` for `p` in `(0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p <= 1.0, "quantile level {p} outside (0, 1]");
        let w = self.left.weight();
        if let LeftTail::Exponential { rate, weight } = self.left {
            if p > 1.0 - w {
                return ((1.0 - p) / weight).ln() / rate;
            }
        }
        let q = p / (1.0 - w);
        if let TailFamily::RegularlyVarying { slowly, index } = self.family {
            if slowly.is_constant() {
                return (slowly.c / q).powf(1.0 / index);
            }
        }
        self.positive_quantile_at_log(q.ln()).exp()
    }

    /// `ln x` for `x = sup { x >= 0 : P(X > x | X >= 0) >= e^{ln_q} }`.
    ///
    /// Works for levels far below `f64::MIN_POSITIVE`; returns `-inf` when
    /// the answer is `x = 0` (an atom at the origin).
    pub fn positive_quantile_at_log(&self, ln_q: f64) -> f64 {
        debug_assert!(ln_q <= 0.0);
        match self.family {
            TailFamily::RegularlyVarying { slowly, index } if slowly.is_constant() => {
                return (slowly.c.ln() - ln_q) / index;
            }
            TailFamily::SemiExponential {
                prefactor,
                slowly,
                index,
            } if prefactor.is_constant() && slowly.is_constant() => {
                let head = prefactor.c.ln().min(0.0) - ln_q;
                if head <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                return (head / slowly.c).ln() / index;
            }
            _ => {}
        }
        let f = |t: f64| self.ln_positive_survival_at_log(t);
        let lo = match roots::expand_until_at_least(f, ln_q, 0.0, -2.0e3) {
            Some(lo) => lo,
            None => return f64::NEG_INFINITY,
        };
        let hi = match roots::expand_until_below(f, ln_q, lo.max(0.0) + 1.0, 1.0e15) {
            Some(hi) => hi,
            None => return f64::INFINITY,
        };
        roots::boundary_decreasing(f, ln_q, lo, hi, LOG_TOL)
    }

    /// Inverse-transform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile(u)
    }
}

fn check_slowly(name: &str, l: SlowlyVarying, out: &mut Vec<TailIssue>) {
    if !(l.c.is_finite() && l.c > 0.0) {
        out.push(TailIssue::Parameter(format!("{name}.c = {} must be positive", l.c)));
    }
    if !l.beta.is_finite() {
        out.push(TailIssue::Parameter(format!("{name}.beta = {} must be finite", l.beta)));
    }
}

/// A problem with a tail's parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum TailIssue {
    /// The tail index `r` is outside the family's admissible range.
    Index(String),
    Parameter(String),
}

impl std::fmt::Display for TailIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TailIssue::Index(m) | TailIssue::Parameter(m) => f.write_str(m),
        }
    }
}

/// Pointwise minimum of slowly varying functions, `x -> min_j L_j(x)`.
///
/// Used where several types share the smallest tail index and the
/// normalization is driven by the lightest of their `L`s.
#[derive(Debug, Clone, PartialEq)]
pub struct SlowlySelector {
    functions: Vec<SlowlyVarying>,
}

impl SlowlySelector {
    pub fn new(functions: Vec<SlowlyVarying>) -> Self {
        assert!(!functions.is_empty(), "selector needs at least one function");
        Self { functions }
    }

    pub fn single(l: SlowlyVarying) -> Self {
        Self::new(vec![l])
    }

    pub fn functions(&self) -> &[SlowlyVarying] {
        &self.functions
    }

    pub fn is_constant(&self) -> bool {
        self.functions.iter().all(SlowlyVarying::is_constant)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ln_eval(x).exp()
    }

    pub fn ln_eval(&self, x: f64) -> f64 {
        self.functions
            .iter()
            .map(|l| l.ln_eval(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn ln_eval_at_log(&self, t: f64) -> f64 {
        self.functions
            .iter()
            .map(|l| l.ln_eval_at_log(t))
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FamilyName {
    RegularlyVarying,
    SemiExponential,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LeftConfig {
    rate: f64,
    weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailConfig {
    family: FamilyName,
    r: f64,
    #[serde(rename = "L", default)]
    l: Option<SlowlyVarying>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<SlowlyVarying>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    left: Option<LeftConfig>,
}

impl TryFrom<TailConfig> for TailSpec {
    type Error = String;

    fn try_from(cfg: TailConfig) -> Result<Self, Self::Error> {
        let slowly = cfg.l.unwrap_or_default();
        let family = match cfg.family {
            FamilyName::RegularlyVarying => {
                if cfg.a.is_some() {
                    return Err("regularly varying tails take no \"a\" block".into());
                }
                TailFamily::RegularlyVarying {
                    slowly,
                    index: cfg.r,
                }
            }
            FamilyName::SemiExponential => TailFamily::SemiExponential {
                prefactor: cfg.a.unwrap_or_default(),
                slowly,
                index: cfg.r,
            },
        };
        let left = match cfg.left {
            None => LeftTail::None,
            Some(LeftConfig { rate, weight }) => LeftTail::Exponential { rate, weight },
        };
        Ok(TailSpec { family, left })
    }
}

impl From<TailSpec> for TailConfig {
    fn from(spec: TailSpec) -> Self {
        let left = match spec.left {
            LeftTail::None => None,
            LeftTail::Exponential { rate, weight } => Some(LeftConfig { rate, weight }),
        };
        match spec.family {
            TailFamily::RegularlyVarying { slowly, index } => TailConfig {
                family: FamilyName::RegularlyVarying,
                r: index,
                l: Some(slowly),
                a: None,
                left,
            },
            TailFamily::SemiExponential {
                prefactor,
                slowly,
                index,
            } => TailConfig {
                family: FamilyName::SemiExponential,
                r: index,
                l: Some(slowly),
                a: Some(prefactor),
                left,
            },
        }
    }
}
