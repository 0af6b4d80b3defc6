//! Process definition: offspring laws, displacement tails, initial type.
//!
//! A type-`i` parent has `N_{i,j}` children of type `j`, sampled
//! independently across `j`; every child of type `j` is displaced from its
//! parent by an independent draw from `tails[j]`.
//!
//! The JSON form uses 1-based type numbers:
//!
//! ```json
//! {
//!   "types": 2,
//!   "offspring": [[{"kind": "deterministic", "c": 3}, {"kind": "poisson", "lambda": 1}],
//!                 [{"kind": "deterministic", "c": 0}, {"kind": "bernoulli_shifted", "p": 0.5}]],
//!   "tails": [{"family": "regularly_varying", "r": 3}, {"family": "regularly_varying", "r": 1}],
//!   "initial_type": 1
//! }
//! ```

use std::path::Path;

use rand::Rng;
use rand_distr::{Bernoulli, Binomial, Distribution, Gamma, Geometric, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classes::{self, Matrix};
use crate::tails::{TailIssue, TailSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Shape(String),
}

/// Law of the number of type-`j` children of a type-`i` parent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OffspringLaw {
    /// Always `c` children.
    Deterministic { c: f64 },
    /// One child, or two with probability `p`.
    BernoulliShifted { p: f64 },
    Poisson { lambda: f64 },
    /// Failures before the first success, `P(k) = (1-p)^k p`.
    Geometric { p: f64 },
    Binomial { n: f64, p: f64 },
}

impl OffspringLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            OffspringLaw::Deterministic { c } => c,
            OffspringLaw::BernoulliShifted { p } => 1.0 + p,
            OffspringLaw::Poisson { lambda } => lambda,
            OffspringLaw::Geometric { p } => (1.0 - p) / p,
            OffspringLaw::Binomial { n, p } => n * p,
        }
    }

    /// Smallest count with positive probability.
    pub fn min_count(&self) -> u64 {
        match *self {
            OffspringLaw::Deterministic { c } => c as u64,
            OffspringLaw::BernoulliShifted { p } => {
                if p >= 1.0 {
                    2
                } else {
                    1
                }
            }
            OffspringLaw::Poisson { .. } | OffspringLaw::Geometric { .. } => 0,
            OffspringLaw::Binomial { n, p } => {
                if p >= 1.0 {
                    n as u64
                } else {
                    0
                }
            }
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let unit = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);
        let count = |c: f64| c.is_finite() && c >= 0.0 && c.fract() == 0.0 && c <= u32::MAX as f64;
        let mut out = Vec::new();
        match *self {
            OffspringLaw::Deterministic { c } => {
                if !count(c) {
                    out.push(format!("deterministic count c = {c} must be a nonnegative integer"));
                }
            }
            OffspringLaw::BernoulliShifted { p } => {
                if !unit(p) {
                    out.push(format!("bernoulli_shifted p = {p} must lie in [0, 1]"));
                }
            }
            OffspringLaw::Poisson { lambda } => {
                if !(lambda >= 0.0 && lambda < 1e15) {
                    out.push(format!("poisson lambda = {lambda} must be finite and nonnegative"));
                }
            }
            OffspringLaw::Geometric { p } => {
                if !(unit(p) && p > 0.0) {
                    out.push(format!("geometric p = {p} must lie in (0, 1]"));
                }
            }
            OffspringLaw::Binomial { n, p } => {
                if !count(n) {
                    out.push(format!("binomial n = {n} must be a nonnegative integer"));
                }
                if !unit(p) {
                    out.push(format!("binomial p = {p} must lie in [0, 1]"));
                }
            }
        }
        out
    }

    /// Precomputed sampler. The law must be valid.
    pub fn sampler(&self) -> OffspringSampler {
        match *self {
            OffspringLaw::Deterministic { c } => OffspringSampler::Fixed(c as u64),
            OffspringLaw::BernoulliShifted { p } => {
                OffspringSampler::Shifted(Bernoulli::new(p).expect("validated p"), p)
            }
            OffspringLaw::Poisson { lambda } if lambda == 0.0 => OffspringSampler::Fixed(0),
            OffspringLaw::Poisson { lambda } => {
                OffspringSampler::Poisson(Poisson::new(lambda).expect("validated lambda"), lambda)
            }
            OffspringLaw::Geometric { p } if p >= 1.0 => OffspringSampler::Fixed(0),
            OffspringLaw::Geometric { p } => {
                OffspringSampler::Geometric(Geometric::new(p).expect("validated p"), p)
            }
            OffspringLaw::Binomial { n, p } => OffspringSampler::Binomial(
                Binomial::new(n as u64, p).expect("validated binomial"),
                n as u64,
                p,
            ),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.sampler().sample(rng)
    }
}

/// Offspring law with its distribution objects built once.
#[derive(Debug, Clone, Copy)]
pub enum OffspringSampler {
    Fixed(u64),
    Shifted(Bernoulli, f64),
    Poisson(Poisson<f64>, f64),
    Geometric(Geometric, f64),
    Binomial(Binomial, u64, f64),
}

impl OffspringSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            OffspringSampler::Fixed(c) => *c,
            OffspringSampler::Shifted(b, _) => 1 + b.sample(rng) as u64,
            OffspringSampler::Poisson(d, _) => d.sample(rng) as u64,
            OffspringSampler::Geometric(d, _) => d.sample(rng),
            OffspringSampler::Binomial(d, _, _) => d.sample(rng),
        }
    }

    /// Total children of `parents` independent parents, drawn in one shot.
    pub fn sample_sum<R: Rng + ?Sized>(&self, parents: u64, rng: &mut R) -> u64 {
        if parents == 0 {
            return 0;
        }
        match *self {
            OffspringSampler::Fixed(c) => c * parents,
            OffspringSampler::Shifted(_, p) => {
                parents + Binomial::new(parents, p).expect("valid").sample(rng)
            }
            OffspringSampler::Poisson(_, lambda) => {
                Poisson::new(lambda * parents as f64).expect("valid").sample(rng) as u64
            }
            OffspringSampler::Geometric(_, p) => {
                // negative binomial as a gamma mixture of Poissons
                let rate = Gamma::new(parents as f64, (1.0 - p) / p).expect("valid").sample(rng);
                if rate <= 0.0 {
                    0
                } else {
                    Poisson::new(rate).expect("valid").sample(rng) as u64
                }
            }
            OffspringSampler::Binomial(_, n, p) => {
                Binomial::new(n * parents, p).expect("valid").sample(rng)
            }
        }
    }
}

/// A fully specified multi-type branching random walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConfig", into = "ModelConfig")]
pub struct ModelSpec {
    offspring: Vec<Vec<OffspringLaw>>,
    tails: Vec<TailSpec>,
    initial_type: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelConfig {
    types: usize,
    offspring: Vec<Vec<OffspringLaw>>,
    tails: Vec<TailSpec>,
    initial_type: usize,
}

impl TryFrom<ModelConfig> for ModelSpec {
    type Error = String;

    fn try_from(cfg: ModelConfig) -> Result<Self, Self::Error> {
        if cfg.initial_type == 0 {
            return Err("initial_type is 1-based and must be at least 1".into());
        }
        let spec = ModelSpec::new(cfg.offspring, cfg.tails, cfg.initial_type - 1).map_err(|e| e.to_string())?;
        if spec.types() != cfg.types {
            return Err(format!(
                "\"types\" is {} but the offspring table has {} rows",
                cfg.types,
                spec.types()
            ));
        }
        Ok(spec)
    }
}

impl From<ModelSpec> for ModelConfig {
    fn from(spec: ModelSpec) -> Self {
        ModelConfig {
            types: spec.types(),
            offspring: spec.offspring,
            tails: spec.tails,
            initial_type: spec.initial_type + 1,
        }
    }
}

impl ModelSpec {
    /// `initial_type` is 0-based here.
    pub fn new(
        offspring: Vec<Vec<OffspringLaw>>,
        tails: Vec<TailSpec>,
        initial_type: usize,
    ) -> Result<Self, ConfigError> {
        let d = offspring.len();
        if d == 0 {
            return Err(ConfigError::Shape("at least one type is required".into()));
        }
        if let Some(row) = offspring.iter().position(|r| r.len() != d) {
            return Err(ConfigError::Shape(format!(
                "offspring row {} has {} entries, expected {d}",
                row + 1,
                offspring[row].len()
            )));
        }
        if tails.len() != d {
            return Err(ConfigError::Shape(format!("expected {d} tails, got {}", tails.len())));
        }
        if initial_type >= d {
            return Err(ConfigError::Shape(format!(
                "initial type {} outside 1..={d}",
                initial_type + 1
            )));
        }
        Ok(Self {
            offspring,
            tails,
            initial_type,
        })
    }

    /// Single-type model.
    pub fn single(offspring: OffspringLaw, tail: TailSpec) -> Self {
        Self::new(vec![vec![offspring]], vec![tail], 0).expect("1x1 model is well formed")
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn types(&self) -> usize {
        self.offspring.len()
    }

    pub fn offspring(&self, parent: usize, child: usize) -> &OffspringLaw {
        &self.offspring[parent][child]
    }

    pub fn offspring_table(&self) -> &[Vec<OffspringLaw>] {
        &self.offspring
    }

    pub fn tails(&self) -> &[TailSpec] {
        &self.tails
    }

    pub fn tail(&self, j: usize) -> &TailSpec {
        &self.tails[j]
    }

    /// 0-based.
    pub fn initial_type(&self) -> usize {
        self.initial_type
    }

    pub fn with_initial_type(&self, initial_type: usize) -> Self {
        assert!(initial_type < self.types());
        Self {
            initial_type,
            ..self.clone()
        }
    }

    pub fn with_tails(&self, tails: Vec<TailSpec>) -> Result<Self, ConfigError> {
        Self::new(self.offspring.clone(), tails, self.initial_type)
    }

    /// `M[i][j] = E N_{i,j}`, from closed-form means.
    pub fn mean_matrix(&self) -> Matrix {
        self.offspring
            .iter()
            .map(|row| row.iter().map(OffspringLaw::mean).collect())
            .collect()
    }

    /// True when every offspring count is deterministic.
    pub fn is_deterministic(&self) -> bool {
        self.offspring
            .iter()
            .flatten()
            .all(|l| matches!(l, OffspringLaw::Deterministic { .. }))
    }
}

/// Which standing assumption (or parameter rule) a violation breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonFiniteMean,
    OffspringParameter,
    TailParameter,
    /// Semi-exponential index outside `(0, 1)`.
    SemiExponentialIndex,
    /// Regularly varying index not positive.
    RegularlyVaryingIndex,
    /// Perron root of the initial class at most one.
    SubcriticalInitialClass,
    /// The initial class can die out while survival is required.
    ExtinctionPossible,
}

impl ViolationKind {
    /// Parameter errors make the model unusable; the rest are assumptions
    /// of the limit theorems.
    pub fn is_parameter_error(self) -> bool {
        !matches!(
            self,
            ViolationKind::SubcriticalInitialClass | ViolationKind::ExtinctionPossible
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    pub fn has_parameter_errors(&self) -> bool {
        self.violations.iter().any(|v| v.kind.is_parameter_error())
    }

    fn push(&mut self, kind: ViolationKind, message: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            message: message.into(),
        });
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "- {:?}: {}", v.kind, v.message)?;
        }
        Ok(())
    }
}

/// Extra requirements a verification run places on the model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ValidationProfile {
    /// The initial class must survive almost surely.
    pub require_survival: bool,
}

/// Check the model against parameter rules and the standing assumptions,
/// without survival requirements.
pub fn validate(spec: &ModelSpec) -> ValidationReport {
    validate_with(spec, ValidationProfile::default())
}

pub fn validate_with(spec: &ModelSpec, profile: ValidationProfile) -> ValidationReport {
    let mut report = ValidationReport::default();
    let d = spec.types();
    for i in 0..d {
        for j in 0..d {
            let law = spec.offspring(i, j);
            for message in law.violations() {
                report.push(
                    ViolationKind::OffspringParameter,
                    format!("offspring[{}][{}]: {message}", i + 1, j + 1),
                );
            }
            if !law.mean().is_finite() {
                report.push(
                    ViolationKind::NonFiniteMean,
                    format!("offspring[{}][{}] has non-finite mean", i + 1, j + 1),
                );
            }
        }
    }
    for (j, tail) in spec.tails().iter().enumerate() {
        for issue in tail.violations() {
            let kind = match (&issue, tail.is_semi_exponential()) {
                (TailIssue::Index(_), true) => ViolationKind::SemiExponentialIndex,
                (TailIssue::Index(_), false) => ViolationKind::RegularlyVaryingIndex,
                (TailIssue::Parameter(_), _) => ViolationKind::TailParameter,
            };
            report.push(kind, format!("tail[{}]: {issue}", j + 1));
        }
    }
    if report.has(ViolationKind::NonFiniteMean) || report.has(ViolationKind::OffspringParameter) {
        return report;
    }

    let m = spec.mean_matrix();
    let condensation = classes::condense(&m);
    let root = condensation.class_of[spec.initial_type()];
    let block = condensation.block(&m, root);
    match classes::perron(&block) {
        Ok(p) if p.rho <= 1.0 => report.push(
            ViolationKind::SubcriticalInitialClass,
            format!("Perron root of the initial class is {} <= 1", p.rho),
        ),
        Ok(_) => {}
        Err(e) => report.push(
            ViolationKind::SubcriticalInitialClass,
            format!("Perron root of the initial class not computable: {e}"),
        ),
    }
    if profile.require_survival {
        let members = &condensation.classes[root];
        if can_die_out(spec, members) {
            report.push(
                ViolationKind::ExtinctionPossible,
                "the initial class dies out with positive probability".to_string(),
            );
        }
    }
    report
}

/// Whether the sub-population living in `members` (one class) can become
/// empty with positive probability, starting from the initial type.
///
/// A type can die out when its least likely-possible brood inside the class
/// consists only of types that can themselves die out; the set is grown to
/// a fixed point.
fn can_die_out(spec: &ModelSpec, members: &[usize]) -> bool {
    let mut mortal = vec![false; spec.types()];
    loop {
        let mut changed = false;
        for &i in members {
            if mortal[i] {
                continue;
            }
            let ok = members
                .iter()
                .all(|&j| spec.offspring(i, j).min_count() == 0 || mortal[j]);
            if ok {
                mortal[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    mortal[spec.initial_type()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn det(c: f64) -> OffspringLaw {
        OffspringLaw::Deterministic { c }
    }

    #[test]
    fn validate_examples() {
        let ok = ModelSpec::single(det(2.0), TailSpec::pareto(2.0));
        assert!(validate(&ok).is_clean());

        let critical = ModelSpec::single(det(1.0), TailSpec::pareto(2.0));
        assert!(validate(&critical).has(ViolationKind::SubcriticalInitialClass));

        let bad_se = ModelSpec::single(det(2.0), TailSpec::stretched_exponential(1.2));
        assert!(validate(&bad_se).has(ViolationKind::SemiExponentialIndex));

        let bad_rv = ModelSpec::single(det(2.0), TailSpec::pareto(0.0));
        assert!(validate(&bad_rv).has(ViolationKind::RegularlyVaryingIndex));
    }

    #[test]
    fn survival_requirement() {
        let poisson = ModelSpec::single(OffspringLaw::Poisson { lambda: 2.0 }, TailSpec::pareto(2.0));
        assert!(validate(&poisson).is_clean());
        let strict = ValidationProfile {
            require_survival: true,
        };
        assert!(validate_with(&poisson, strict).has(ViolationKind::ExtinctionPossible));
        let shifted = ModelSpec::single(OffspringLaw::BernoulliShifted { p: 0.2 }, TailSpec::pareto(2.0));
        assert!(validate_with(&shifted, strict).is_clean());

        // type 1 always has a type-2 child, type 2 may have none of either
        let two = ModelSpec::new(
            vec![
                vec![OffspringLaw::Poisson { lambda: 1.0 }, det(1.0)],
                vec![OffspringLaw::Poisson { lambda: 1.0 }, OffspringLaw::Poisson { lambda: 1.0 }],
            ],
            vec![TailSpec::pareto(1.0); 2],
            0,
        )
        .unwrap();
        assert!(validate_with(&two, strict).has(ViolationKind::ExtinctionPossible));
    }

    #[test]
    fn mean_matrix_examples() {
        assert_eq!(ModelSpec::single(det(2.0), TailSpec::pareto(2.0)).mean_matrix(), vec![vec![2.0]]);
        let spec = ModelSpec::new(
            vec![vec![det(0.0), OffspringLaw::Poisson { lambda: 1.5 }], vec![det(0.0), det(0.0)]],
            vec![TailSpec::pareto(1.0); 2],
            0,
        )
        .unwrap();
        assert_eq!(spec.mean_matrix(), vec![vec![0.0, 1.5], vec![0.0, 0.0]]);
        let b = OffspringLaw::BernoulliShifted { p: 0.0 };
        let spec = ModelSpec::new(vec![vec![b; 2]; 2], vec![TailSpec::pareto(1.0); 2], 0).unwrap();
        assert_eq!(spec.mean_matrix(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn config_parsing() {
        let text = r#"{
            "types": 2,
            "offspring": [[{"kind":"deterministic","c":3},{"kind":"poisson","lambda":1}],
                          [{"kind":"deterministic","c":0},{"kind":"bernoulli_shifted","p":0.5}]],
            "tails": [{"family":"regularly_varying","r":3},{"family":"regularly_varying","r":1}],
            "initial_type": 1
        }"#;
        let spec = ModelSpec::from_json_str(text).unwrap();
        assert_eq!(spec.mean_matrix(), vec![vec![3.0, 1.0], vec![0.0, 1.5]]);
        let back = ModelSpec::from_json_str(&spec.to_json_pretty()).unwrap();
        assert_eq!(spec, back);

        let unknown = text.replace("\"initial_type\": 1", "\"initial_type\": 1, \"extra\": true");
        assert!(ModelSpec::from_json_str(&unknown).is_err());
        let bad_kind = text.replace("\"poisson\",\"lambda\":1", "\"poisson\",\"mu\":1");
        assert!(ModelSpec::from_json_str(&bad_kind).is_err());
        let bad_initial = text.replace("\"initial_type\": 1", "\"initial_type\": 3");
        assert!(ModelSpec::from_json_str(&bad_initial).is_err());
        let bad_types = text.replace("\"types\": 2", "\"types\": 3");
        assert!(ModelSpec::from_json_str(&bad_types).is_err());
    }

    fn laws() -> Vec<OffspringLaw> {
        vec![
            det(3.0),
            OffspringLaw::BernoulliShifted { p: 0.3 },
            OffspringLaw::Poisson { lambda: 1.7 },
            OffspringLaw::Geometric { p: 0.4 },
            OffspringLaw::Binomial { n: 6.0, p: 0.35 },
        ]
    }

    /// Independent pmf oracle, written from the textbook definitions.
    fn pmf(law: &OffspringLaw, k: u64) -> f64 {
        let fact = |n: u64| (1..=n).map(|x| x as f64).product::<f64>();
        match *law {
            OffspringLaw::Deterministic { c } => (k == c as u64) as u8 as f64,
            OffspringLaw::BernoulliShifted { p } => match k {
                1 => 1.0 - p,
                2 => p,
                _ => 0.0,
            },
            OffspringLaw::Poisson { lambda } => (-lambda).exp() * lambda.powi(k as i32) / fact(k),
            OffspringLaw::Geometric { p } => (1.0 - p).powi(k as i32) * p,
            OffspringLaw::Binomial { n, p } => {
                let n = n as u64;
                if k > n {
                    0.0
                } else {
                    fact(n) / (fact(k) * fact(n - k)) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
                }
            }
        }
    }

    #[test]
    fn sample_means_within_five_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for law in laws() {
            let n = 100_000;
            let xs: Vec<f64> = (0..n).map(|_| law.sample(&mut rng) as f64).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - law.mean()).powi(2)).sum::<f64>() / n as f64;
            let sigma = (var / n as f64).sqrt();
            assert!((mean - law.mean()).abs() <= 5.0 * sigma.max(1e-12), "{law:?}: {mean}");
        }
    }

    #[test]
    fn chi_square_goodness_of_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000u64;
        for law in laws() {
            let sampler = law.sampler();
            let mut counts = [0u64; 21];
            for _ in 0..n {
                let k = sampler.sample(&mut rng).min(20);
                counts[k as usize] += 1;
            }
            // first 20 support points, remainder pooled; cells with tiny
            // expectation merged into the pooled cell
            let mut stat = 0.0;
            let mut cells = 0;
            let mut pooled_obs = 0.0;
            let mut pooled_exp = 0.0;
            let mut covered = 0.0;
            for k in 0..20u64 {
                let p = pmf(&law, k);
                covered += p;
                let expected = p * n as f64;
                if expected >= 5.0 {
                    stat += (counts[k as usize] as f64 - expected).powi(2) / expected;
                    cells += 1;
                } else {
                    pooled_obs += counts[k as usize] as f64;
                    pooled_exp += expected;
                }
            }
            pooled_obs += counts[20] as f64;
            pooled_exp += (1.0 - covered).max(0.0) * n as f64;
            if pooled_exp >= 5.0 {
                stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
                cells += 1;
            } else {
                assert!(pooled_obs <= 5.0 + 10.0 * pooled_exp.sqrt(), "{law:?} pooled");
            }
            if cells < 2 {
                // single-point law
                assert_eq!(counts.iter().filter(|&&c| c > 0).count(), 1);
                continue;
            }
            let critical = ChiSquared::new((cells - 1) as f64).unwrap().inverse_cdf(1.0 - 1e-4);
            assert!(stat <= critical, "{law:?}: chi2 {stat} > {critical}");
        }
    }

    #[test]
    fn sum_sampler_matches_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for law in laws() {
            let s = law.sampler();
            let parents = 1_000u64;
            let reps = 2_000;
            let total: u64 = (0..reps).map(|_| s.sample_sum(parents, &mut rng)).sum();
            let mean = total as f64 / (reps as f64 * parents as f64);
            assert!((mean - law.mean()).abs() < 0.01 * law.mean().max(1.0), "{law:?}: {mean}");
        }
    }

    #[test]
    fn parameter_violations() {
        let bad = [
            det(1.5),
            OffspringLaw::BernoulliShifted { p: 1.5 },
            OffspringLaw::Poisson { lambda: -1.0 },
            OffspringLaw::Geometric { p: 0.0 },
            OffspringLaw::Binomial { n: 2.5, p: 0.5 },
        ];
        for law in bad {
            assert!(!law.violations().is_empty(), "{law:?}");
        }
        for law in laws() {
            assert!(law.violations().is_empty());
        }
    }
}
