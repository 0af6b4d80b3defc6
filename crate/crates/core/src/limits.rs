//! Limit objects and Monte Carlo verification.
//!
//! Heavy tails: `P(R_n <= a_n x) -> E exp(-zeta W x^{-r})`, with
//! `zeta = c * sum_j rho^{-j} P_I(survival to j)` and `c` either the left
//! Perron weight `u_I` or 1. Semi-exponential tails:
//! `R_n / psi(n) -> (ln rho)^{1/r}` almost surely. Total population: the
//! number `Y_n^i` of type-`i` particles with descendants at generation `n`
//! grows like `zeta_i W rho_i^n n^{k_i}`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::classes::{self, ClassDecomposition, ClassError, DominantPair, SemiExpDominant};
use crate::engine::{self, EngineError, Simulator, TrialBatch, TrialOptions, WMode, DEFAULT_CAP};
use crate::model::{validate_with, ModelSpec, ValidationProfile, ValidationReport};
use crate::normalization::{self, NormalizationError, NormalizedValue};
use crate::rng::Domain;
use crate::stats::{self, Interval, Summary};

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("model violates the assumptions:\n{0}")]
    Assumptions(ValidationReport),
    #[error("dominant pair is not unique; the limit law is not determined")]
    NonUniquePair(DominantPair),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Normalization(#[from] NormalizationError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("only {usable} usable trials (need at least 2); {capped} hit the population cap")]
    TooFewTrials { usable: usize, capped: usize },
}

impl LimitError {
    /// The model or the request cannot be verified, as opposed to a
    /// runtime failure.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            LimitError::Assumptions(_)
                | LimitError::NonUniquePair(_)
                | LimitError::NotApplicable(_)
                | LimitError::Class(_)
                | LimitError::Normalization(_)
        )
    }
}

/// Factor in front of the survival series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Prefactor {
    One,
    /// `u_i`, the left Perron weight of the start type in its class.
    LeftEigen,
}

/// Which survival probability enters the series at depth `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalEvent {
    /// `P_i(|Z_j| > 0)`: some particle of any type at depth `j`.
    AnyType,
    /// `sum_l P_i(Z_j^l > 0)`, summed over types.
    PerTypeSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZetaOptions {
    pub depth: usize,
    pub trials: usize,
    pub seed: u64,
    pub prefactor: Prefactor,
    pub event: SurvivalEvent,
    /// Start the series at `j = 1` instead of `j = 0`.
    pub from_one: bool,
}

impl ZetaOptions {
    pub fn new(depth: usize, trials: usize, seed: u64) -> Self {
        Self {
            depth,
            trials,
            seed,
            prefactor: Prefactor::LeftEigen,
            event: SurvivalEvent::AnyType,
            from_one: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaTerm {
    pub j: usize,
    /// Estimated survival term for the selected event.
    pub probability: f64,
    /// Half width of a 95% normal interval.
    pub half_width: f64,
    /// `P_i(Z_j^l > 0)` per type `l`.
    pub per_type: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Series without the prefactor.
    pub series: f64,
    pub prefactor: Prefactor,
    pub prefactor_value: f64,
    pub event: SurvivalEvent,
    pub from_one: bool,
    pub start_type: usize,
    pub rho: f64,
    pub depth: usize,
    pub truncation_bound: f64,
    pub terms: Vec<ZetaTerm>,
}

impl ZetaEstimate {
    /// The same estimate under the other prefactor.
    pub fn with_prefactor(&self, prefactor: Prefactor, u: f64) -> Self {
        let c = match prefactor {
            Prefactor::One => 1.0,
            Prefactor::LeftEigen => u,
        };
        Self {
            value: c * self.series,
            std_error: self.std_error / self.prefactor_value * c,
            prefactor,
            prefactor_value: c,
            truncation_bound: self.truncation_bound / self.prefactor_value * c,
            ..self.clone()
        }
    }
}

/// `c * d * rho^{-J} * rho / (rho - 1)`, bounding every omitted term.
pub fn truncation_bound(prefactor_value: f64, d: usize, rho: f64, depth: usize) -> f64 {
    prefactor_value * d as f64 * (-(depth as f64) * rho.ln()).exp() * rho / (rho - 1.0)
}

fn left_weight(decomposition: &ClassDecomposition, i: usize) -> f64 {
    let a = decomposition.class_of(i);
    let pos = decomposition.condensation.classes[a]
        .iter()
        .position(|&j| j == i)
        .expect("type belongs to its class");
    decomposition.spectra[a].left[pos]
}

/// `rho_i`, `k_i` and `u_i` for type `i` as seen from the initial type.
fn type_rates(spec: &ModelSpec) -> Result<ClassDecomposition, ClassError> {
    classes::analyze(&spec.mean_matrix(), Some(spec.initial_type()))
}

/// Estimate `zeta_i` for start type `i` from independent count runs.
///
/// The growth rate is `rho_i`, the largest root among classes preceding
/// `i`. Each run from a single type-`i` particle contributes one draw of
/// the whole weighted series, so the reported standard error is exact for
/// the truncated sum.
pub fn estimate_zeta(spec: &ModelSpec, start: usize, opts: &ZetaOptions) -> Result<ZetaEstimate, LimitError> {
    let decomposition = type_rates(spec)?;
    let rho = decomposition.rho_pre[start];
    if rho <= 1.0 {
        return Err(LimitError::NotApplicable(format!(
            "growth rate {rho} of type {} is not above 1",
            start + 1
        )));
    }
    let sim = Simulator::new(spec)?;
    let d = spec.types();
    let runs: Vec<Vec<Vec<u64>>> = (0..opts.trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = crate::rng::stream(opts.seed, Domain::Zeta, ((start as u64) << 32) | t);
            sim.run_counts(start, opts.depth, &mut rng)
        })
        .collect();
    let first = usize::from(opts.from_one);
    let trials = opts.trials as f64;
    let mut terms = Vec::new();
    for j in first..=opts.depth {
        let per_type: Vec<f64> = (0..d)
            .map(|l| runs.iter().filter(|z| z[j][l] > 0).count() as f64 / trials)
            .collect();
        let (probability, var) = match opts.event {
            SurvivalEvent::AnyType => {
                let p = runs.iter().filter(|z| z[j].iter().any(|&c| c > 0)).count() as f64 / trials;
                (p, p * (1.0 - p))
            }
            SurvivalEvent::PerTypeSum => {
                let xs: Vec<f64> = runs
                    .iter()
                    .map(|z| z[j].iter().filter(|&&c| c > 0).count() as f64)
                    .collect();
                (stats::mean(&xs), if xs.len() > 1 { stats::variance(&xs) } else { 0.0 })
            }
        };
        terms.push(ZetaTerm {
            j,
            probability,
            half_width: 1.96 * (var / trials).sqrt(),
            per_type,
        });
    }
    // per-run weighted series, for the standard error
    let weight = |j: usize| rho.powi(-(j as i32));
    let draws: Vec<f64> = runs
        .iter()
        .map(|z| {
            (first..=opts.depth)
                .map(|j| {
                    let hit = match opts.event {
                        SurvivalEvent::AnyType => z[j].iter().any(|&c| c > 0) as u8 as f64,
                        SurvivalEvent::PerTypeSum => z[j].iter().filter(|&&c| c > 0).count() as f64,
                    };
                    weight(j) * hit
                })
                .sum()
        })
        .collect();
    let series: f64 = terms.iter().map(|t| weight(t.j) * t.probability).sum();
    let prefactor_value = match opts.prefactor {
        Prefactor::One => 1.0,
        Prefactor::LeftEigen => left_weight(&decomposition, start),
    };
    let std_error = if draws.len() > 1 {
        prefactor_value * stats::standard_error(&draws)
    } else {
        0.0
    };
    Ok(ZetaEstimate {
        value: prefactor_value * series,
        std_error,
        series,
        prefactor: opts.prefactor,
        prefactor_value,
        event: opts.event,
        from_one: opts.from_one,
        start_type: start,
        rho,
        depth: opts.depth,
        truncation_bound: truncation_bound(prefactor_value, d, rho, opts.depth),
        terms,
    })
}

/// `E exp(-zeta W x^{-r})` over the `W` samples; 0 for `x <= 0`.
pub fn limit_cdf(x: f64, zeta: f64, r: f64, w: &[f64]) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let scale = zeta * (-r * x.ln()).exp();
    w.iter().map(|&wi| (-scale * wi).exp()).sum::<f64>() / w.len() as f64
}

/// Which statement a report checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Regularly varying tails, one class reachable.
    HeavyIrreducible,
    /// Regularly varying tails, several classes.
    HeavyReducible,
    SemiExponentialIrreducible,
    SemiExponentialReducible,
    TotalPopulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CdfPoint {
    pub x: f64,
    pub empirical: f64,
    pub theoretical: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialAccounting {
    pub trials: usize,
    pub extinct: usize,
    pub capped: usize,
    /// More than 0.1% of trials hit the cap, so statistics may be biased.
    pub cap_bias: bool,
}

impl TrialAccounting {
    fn of(batch: &TrialBatch) -> Self {
        Self {
            trials: batch.results.len(),
            extinct: batch.extinct,
            capped: batch.capped,
            cap_bias: batch.cap_bias(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeavySection {
    pub n: usize,
    pub dominant: DominantPair,
    pub a_n: NormalizedValue,
    /// Estimate under the selected prefactor.
    pub zeta: ZetaEstimate,
    /// The same series under the other prefactor.
    pub zeta_alternative: ZetaEstimate,
    pub w_mode: WMode,
    pub w: Summary,
    /// KS distance of `R_n / a_n` to the limit law.
    pub ks_rightmost: f64,
    pub ks_rightmost_alternative: f64,
    /// KS distance of `M_n / a_n` to the limit law.
    pub ks_max_displacement: f64,
    /// KS distance of `M_n / a_n` to its exact law, when offspring are
    /// deterministic.
    pub ks_max_displacement_exact: Option<f64>,
    /// `rho(a)^{1/min r}` per class, each class on its own.
    pub isolated_speeds: Vec<f64>,
    /// The dominant speed beats every isolated class speed.
    pub anomalous: bool,
    pub grid: Vec<CdfPoint>,
}

impl HeavySection {
    /// Smaller of the two KS distances for `R_n`.
    pub fn best_ks_rightmost(&self) -> f64 {
        self.ks_rightmost.min(self.ks_rightmost_alternative)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiExpRow {
    pub n: usize,
    pub psi: f64,
    pub samples: usize,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    /// 95% bootstrap interval of the median.
    pub median_ci: Interval,
    /// `|median - target|`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiExpSection {
    pub dominant: SemiExpDominant,
    pub target: f64,
    pub rows: Vec<SemiExpRow>,
    /// Each gap is at most the previous one plus the wider of the two
    /// bootstrap half widths.
    pub trend_ok: bool,
    /// Median at the largest `n` lies in `[target / 2, 2 target]`.
    pub band_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeComparison {
    pub type_index: usize,
    pub rho: f64,
    pub k: u32,
    pub zeta: f64,
    pub zeta_std_error: f64,
    /// Mean of `Y_n^i / (rho_i^n n^{k_i})`.
    pub mean_scaled: f64,
    pub mean_w: f64,
    /// `zeta_i * mean W`.
    pub target: f64,
    /// Combined standard error of `mean_scaled - target`.
    pub std_error: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TotalPopulationSection {
    pub n: usize,
    pub types: Vec<TypeComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub mode: Mode,
    pub seed: u64,
    pub accounting: TrialAccounting,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heavy: Option<HeavySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub semi_exponential: Option<SemiExpSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_population: Option<TotalPopulationSection>,
}

impl VerificationReport {
    /// `x,empirical,theoretical,gap` for heavy-tail reports, otherwise
    /// `n,psi,median,q10,q90,target` or `type,mean_scaled,target,std_error`.
    pub fn to_cdf_csv(&self) -> String {
        let mut out = String::new();
        if let Some(h) = &self.heavy {
            out.push_str("x,empirical,theoretical,gap\n");
            for p in &h.grid {
                out.push_str(&format!("{:e},{:e},{:e},{:e}\n", p.x, p.empirical, p.theoretical, p.gap));
            }
        } else if let Some(s) = &self.semi_exponential {
            out.push_str("n,psi,median,q10,q90,target\n");
            for r in &s.rows {
                out.push_str(&format!("{},{:e},{:e},{:e},{:e},{:e}\n", r.n, r.psi, r.median, r.q10, r.q90, s.target));
            }
        } else if let Some(t) = &self.total_population {
            out.push_str("type,mean_scaled,target,std_error\n");
            for c in &t.types {
                out.push_str(&format!("{},{:e},{:e},{:e}\n", c.type_index + 1, c.mean_scaled, c.target, c.std_error));
            }
        }
        out
    }
}

/// Settings shared by the heavy-tail verification.
#[derive(Debug, Clone, PartialEq)]
pub struct HeavyOptions {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub cap: usize,
    /// `None` picks `u_I` for one class and 1 otherwise.
    pub prefactor: Option<Prefactor>,
    pub event: SurvivalEvent,
    pub from_one: bool,
    pub zeta_depth: usize,
    pub zeta_trials: usize,
    /// Fresh count runs for `W`; defaults to `trials`.
    pub w_trials: Option<usize>,
    pub grid_points: usize,
}

impl HeavyOptions {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            trials,
            seed,
            cap: DEFAULT_CAP,
            prefactor: None,
            event: SurvivalEvent::AnyType,
            from_one: false,
            zeta_depth: 30,
            zeta_trials: 4000,
            w_trials: None,
            grid_points: 200,
        }
    }
}

fn check(spec: &ModelSpec, require_survival: bool) -> Result<ClassDecomposition, LimitError> {
    let report = validate_with(spec, ValidationProfile { require_survival });
    if !report.is_clean() {
        return Err(LimitError::Assumptions(report));
    }
    Ok(type_rates(spec)?)
}

fn scaled(value: Option<f64>, a: f64) -> f64 {
    value.map_or(f64::NEG_INFINITY, |v| v / a)
}

/// Compare `R_n / a_n` and `M_n / a_n` with the Frechet-mixture limit.
///
/// One reachable class selects the irreducible statement (`W = Z_n . v /
/// rho^n`, prefactor `u_I`); otherwise the reducible one (`W(I) = Z_n^I /
/// (n^k rho^n)`, prefactor 1), which also requires almost sure survival.
/// `W` comes from fresh count runs, independent of the displacement trials.
pub fn verify_heavy(spec: &ModelSpec, opts: &HeavyOptions) -> Result<VerificationReport, LimitError> {
    let probe = type_rates(spec)?;
    let irreducible = probe.is_irreducible();
    let decomposition = check(spec, !irreducible)?;
    let pair = classes::dominant_pair_heavy(&decomposition, spec.tails())?;
    if !pair.unique {
        return Err(LimitError::NonUniquePair(pair));
    }
    let (mode, w_mode, default_prefactor) = if irreducible {
        (
            Mode::HeavyIrreducible,
            WMode::irreducible(&decomposition, spec.initial_type()),
            Prefactor::LeftEigen,
        )
    } else {
        (Mode::HeavyReducible, WMode::reducible(&pair), Prefactor::One)
    };
    let prefactor = opts.prefactor.unwrap_or(default_prefactor);
    let tail = spec.tail(pair.type_index);
    let a_n = normalization::solve_a_n(opts.n as u64, pair.rho, pair.k, tail)?;
    let sim = Simulator::new(spec)?;

    let track = spec.is_deterministic();
    let mut trial_opts = TrialOptions::new(opts.n).with_cap(opts.cap);
    if track {
        trial_opts = trial_opts.with_ancestry();
    }
    let batch = engine::run_trials(&sim, &trial_opts, opts.trials, opts.seed);
    let usable: Vec<_> = batch.results.iter().filter(|t| !t.capped).collect();
    if usable.len() < 2 {
        return Err(LimitError::TooFewTrials {
            usable: usable.len(),
            capped: batch.capped,
        });
    }
    let a = a_n.value;
    let r_samples: Vec<f64> = usable.iter().map(|t| scaled(t.rightmost, a)).collect();
    let m_samples: Vec<f64> = usable.iter().map(|t| scaled(t.max_displacement_overall(), a)).collect();

    let w_runs = engine::run_count_trials(
        &sim,
        spec.initial_type(),
        opts.n,
        opts.w_trials.unwrap_or(opts.trials),
        opts.seed,
        Domain::Martingale,
    );
    let w: Vec<f64> = w_runs.iter().map(|z| w_mode.estimate(&z[opts.n], opts.n)).collect();

    let zeta_opts = ZetaOptions {
        depth: opts.zeta_depth,
        trials: opts.zeta_trials,
        seed: opts.seed,
        prefactor,
        event: opts.event,
        from_one: opts.from_one,
    };
    let zeta = estimate_zeta(spec, pair.type_index, &zeta_opts)?;
    let u = left_weight(&decomposition, pair.type_index);
    let other = match prefactor {
        Prefactor::One => Prefactor::LeftEigen,
        Prefactor::LeftEigen => Prefactor::One,
    };
    let zeta_alternative = zeta.with_prefactor(other, u);

    let r = pair.r;
    let finite = stats::sorted(&r_samples.iter().copied().filter(|x| x.is_finite()).collect::<Vec<_>>());
    if finite.len() < 2 {
        return Err(LimitError::TooFewTrials {
            usable: finite.len(),
            capped: batch.capped,
        });
    }
    let grid_x = stats::linspace(
        stats::quantile_sorted(&finite, 0.05),
        stats::quantile_sorted(&finite, 0.99),
        opts.grid_points,
    );
    let law = |z: f64, x: f64| limit_cdf(x, z, r, &w);
    let ks_rightmost = stats::ks_distance(&r_samples, |x| law(zeta.value, x), &grid_x);
    let ks_rightmost_alternative = stats::ks_distance(&r_samples, |x| law(zeta_alternative.value, x), &grid_x);
    let ks_max_displacement = stats::ks_distance(&m_samples, |x| law(zeta.value, x), &grid_x);
    let ks_max_displacement_exact = if track {
        let y = usable[0].ancestors.clone().expect("ancestry tracked");
        let exact = |x: f64| {
            let ln: f64 = spec
                .tails()
                .iter()
                .zip(&y)
                .map(|(t, &yi)| yi as f64 * (-t.survival(a * x)).ln_1p())
                .sum();
            ln.exp()
        };
        Some(stats::ks_distance(&m_samples, exact, &grid_x))
    } else {
        None
    };

    let sorted_r = stats::sorted(&r_samples);
    let grid = grid_x
        .iter()
        .map(|&x| {
            let empirical = stats::ecdf(&sorted_r, x);
            let theoretical = law(zeta.value, x);
            CdfPoint {
                x,
                empirical,
                theoretical,
                gap: (empirical - theoretical).abs(),
            }
        })
        .collect();

    let isolated_speeds: Vec<f64> = decomposition
        .isolated_speeds(spec.tails())
        .into_iter()
        .enumerate()
        .filter(|&(a, _)| decomposition.active[a])
        .map(|(_, s)| s)
        .collect();
    let anomalous = isolated_speeds.iter().all(|&s| pair.speed > s * (1.0 + classes::TIE_TOLERANCE));

    Ok(VerificationReport {
        mode,
        seed: opts.seed,
        accounting: TrialAccounting::of(&batch),
        heavy: Some(HeavySection {
            n: opts.n,
            dominant: pair,
            a_n,
            zeta,
            zeta_alternative,
            w_mode,
            w: Summary::of(&w),
            ks_rightmost,
            ks_rightmost_alternative,
            ks_max_displacement,
            ks_max_displacement_exact,
            isolated_speeds,
            anomalous,
            grid,
        }),
        semi_exponential: None,
        total_population: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemiExpOptions {
    pub ns: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub cap: usize,
    pub bootstrap_reps: usize,
}

impl SemiExpOptions {
    pub fn new(ns: Vec<usize>, trials: usize, seed: u64) -> Self {
        Self {
            ns,
            trials,
            seed,
            cap: DEFAULT_CAP,
            bootstrap_reps: 1000,
        }
    }
}

/// Track `R_n / psi(n)` against `(ln rho)^{1/r}` along `ns`.
///
/// Every trial runs to the largest `n` once and is read off at each
/// smaller `n`. Trials extinct by generation `n` are left out at that `n`.
pub fn verify_semiexp(spec: &ModelSpec, opts: &SemiExpOptions) -> Result<VerificationReport, LimitError> {
    let probe = type_rates(spec)?;
    let irreducible = probe.is_irreducible();
    let decomposition = check(spec, !irreducible)?;
    let dominant = classes::dominant_data_semiexp(&decomposition, spec.tails())?;
    if dominant.rho <= 1.0 {
        return Err(LimitError::NotApplicable(format!(
            "driving growth rate {} is not above 1",
            dominant.rho
        )));
    }
    let mut ns = opts.ns.clone();
    ns.sort_unstable();
    ns.dedup();
    let Some(&n_max) = ns.last() else {
        return Err(LimitError::NotApplicable("empty list of generations".into()));
    };
    let sim = Simulator::new(spec)?;
    let batch = engine::run_trials(&sim, &TrialOptions::new(n_max).with_cap(opts.cap), opts.trials, opts.seed);
    let target = dominant.target();
    let mut rows = Vec::new();
    for (idx, &n) in ns.iter().enumerate() {
        let psi = normalization::solve_psi(n as u64, dominant.r, &dominant.selector)?;
        let xs: Vec<f64> = batch
            .results
            .iter()
            .filter(|t| !t.capped)
            .filter_map(|t| t.rightmost_by_generation[n])
            .map(|r| r / psi.value)
            .collect();
        if xs.len() < 2 {
            return Err(LimitError::TooFewTrials {
                usable: xs.len(),
                capped: batch.capped,
            });
        }
        let sorted = stats::sorted(&xs);
        let median = stats::quantile_sorted(&sorted, 0.5);
        let reps = stats::bootstrap(&xs, opts.bootstrap_reps, opts.seed, idx as u64, stats::median);
        rows.push(SemiExpRow {
            n,
            psi: psi.value,
            samples: xs.len(),
            median,
            q10: stats::quantile_sorted(&sorted, 0.1),
            q90: stats::quantile_sorted(&sorted, 0.9),
            median_ci: stats::percentile_interval(&reps, 0.95),
            gap: (median - target).abs(),
        });
    }
    let trend_ok = rows.windows(2).all(|w| {
        let slack = w[0].median_ci.half_width().max(w[1].median_ci.half_width());
        w[1].gap <= w[0].gap + slack
    });
    let last = rows.last().expect("at least one n");
    let band_ok = last.median >= 0.5 * target && last.median <= 2.0 * target;
    Ok(VerificationReport {
        mode: if irreducible {
            Mode::SemiExponentialIrreducible
        } else {
            Mode::SemiExponentialReducible
        },
        seed: opts.seed,
        accounting: TrialAccounting::of(&batch),
        heavy: None,
        semi_exponential: Some(SemiExpSection {
            dominant,
            target,
            rows,
            trend_ok,
            band_ok,
        }),
        total_population: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TotalPopulationOptions {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub cap: usize,
    pub zeta_trials: usize,
    pub bootstrap_reps: usize,
}

impl TotalPopulationOptions {
    pub fn new(n: usize, trials: usize, seed: u64) -> Self {
        Self {
            n,
            trials,
            seed,
            cap: DEFAULT_CAP,
            zeta_trials: 4000,
            bootstrap_reps: 1000,
        }
    }
}

/// Compare `mean Y_n^i / (rho_i^n n^{k_i})` with `zeta_i mean W`.
///
/// `zeta_i` is summed over depths `0..n-1`, the depths a generation-`k`
/// particle can need to reach generation `n`, with the any-type survival
/// event. One class uses `W = Z_n . v / rho^n` and prefactor `u_i`;
/// otherwise `W(i) = Z_n^i / (n^{k_i} rho_i^n)` and prefactor 1. Both
/// sides are computed on the same trials, so the bootstrap runs over
/// paired differences.
pub fn verify_total_population(spec: &ModelSpec, opts: &TotalPopulationOptions) -> Result<VerificationReport, LimitError> {
    let decomposition = check(spec, false)?;
    let irreducible = decomposition.is_irreducible();
    let sim = Simulator::new(spec)?;
    let n = opts.n;
    let batch = engine::run_trials(&sim, &TrialOptions::new(n).with_cap(opts.cap).with_ancestry(), opts.trials, opts.seed);
    let usable: Vec<_> = batch.results.iter().filter(|t| !t.capped).collect();
    if usable.len() < 2 {
        return Err(LimitError::TooFewTrials {
            usable: usable.len(),
            capped: batch.capped,
        });
    }
    let mut types = Vec::new();
    for i in 0..spec.types() {
        let a = decomposition.class_of(i);
        let rho = decomposition.rho_pre[i];
        if !decomposition.active[a] || rho <= 1.0 {
            continue;
        }
        let k = decomposition.growth[i];
        let (w_mode, prefactor) = if irreducible {
            (WMode::irreducible(&decomposition, spec.initial_type()), Prefactor::LeftEigen)
        } else {
            (WMode::Reducible { index: i, k, rho }, Prefactor::One)
        };
        let zeta = estimate_zeta(
            spec,
            i,
            &ZetaOptions {
                depth: n.saturating_sub(1),
                trials: opts.zeta_trials,
                seed: opts.seed,
                prefactor,
                event: SurvivalEvent::AnyType,
                from_one: false,
            },
        )?;
        let ys: Vec<f64> = usable
            .iter()
            .map(|t| engine::scale_down(t.ancestors.as_ref().expect("ancestry tracked")[i] as f64, rho, k, n))
            .collect();
        let ws: Vec<f64> = usable.iter().map(|t| w_mode.estimate(&t.counts[n], n)).collect();
        let diffs: Vec<f64> = ys.iter().zip(&ws).map(|(y, w)| y - zeta.value * w).collect();
        let reps = stats::bootstrap(&diffs, opts.bootstrap_reps, opts.seed, 1_000 + i as u64, stats::mean);
        let se_diff = stats::variance(&reps).sqrt();
        let mean_w = stats::mean(&ws);
        let std_error = se_diff.hypot(mean_w * zeta.std_error);
        let mean_scaled = stats::mean(&ys);
        let target = zeta.value * mean_w;
        let within_tolerance = (mean_scaled - target).abs() <= (5.0 * std_error).max(1e-9 * target.abs());
        types.push(TypeComparison {
            type_index: i,
            rho,
            k,
            zeta: zeta.value,
            zeta_std_error: zeta.std_error,
            mean_scaled,
            mean_w,
            target,
            std_error,
            within_tolerance,
        });
    }
    if types.is_empty() {
        return Err(LimitError::NotApplicable("no type grows faster than 1".into()));
    }
    Ok(VerificationReport {
        mode: Mode::TotalPopulation,
        seed: opts.seed,
        accounting: TrialAccounting::of(&batch),
        heavy: None,
        semi_exponential: None,
        total_population: Some(TotalPopulationSection { n, types }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OffspringLaw;
    use crate::tails::TailSpec;

    fn binary() -> ModelSpec {
        ModelSpec::single(OffspringLaw::Deterministic { c: 2.0 }, TailSpec::pareto(2.0))
    }

    #[test]
    fn limit_cdf_examples() {
        assert!((limit_cdf(1.0, 2.0, 2.0, &[1.0]) - (-2.0f64).exp()).abs() < 1e-15);
        let v = limit_cdf(1.0, 1.0, 1.0, &[1.0, 3.0]);
        assert!((v - 0.208_833).abs() < 1e-6);
        assert_eq!(limit_cdf(0.0, 1.0, 1.0, &[1.0]), 0.0);
        assert!((limit_cdf(1e12, 1.0, 1.0, &[1.0]) - 1.0).abs() < 1e-11);
        assert!((limit_cdf(1e-9, 1.0, 1.0, &[0.0, 1.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn binary_zeta_is_geometric() {
        let z = estimate_zeta(&binary(), 0, &ZetaOptions::new(20, 50, 1)).unwrap();
        let exact = 2.0 - 2f64.powi(-20);
        assert_eq!(z.value, exact);
        assert_eq!(z.std_error, 0.0);
        assert!((z.truncation_bound - 2f64.powi(-20) * 2.0).abs() < 1e-18);
        let one = estimate_zeta(
            &binary(),
            0,
            &ZetaOptions {
                from_one: true,
                ..ZetaOptions::new(20, 50, 1)
            },
        )
        .unwrap();
        assert_eq!(one.value, exact - 1.0);
    }

    #[test]
    fn zeta_rejects_non_growing_types() {
        let spec = ModelSpec::single(OffspringLaw::Deterministic { c: 1.0 }, TailSpec::pareto(2.0));
        assert!(matches!(
            estimate_zeta(&spec, 0, &ZetaOptions::new(5, 5, 0)),
            Err(LimitError::NotApplicable(_))
        ));
    }

    #[test]
    fn binary_total_population_is_exact() {
        let report = verify_total_population(&binary(), &TotalPopulationOptions::new(10, 4, 0)).unwrap();
        let t = &report.total_population.unwrap().types[0];
        assert_eq!(t.mean_scaled, 2.0 - 2f64.powi(-9));
        assert_eq!(t.target, t.mean_scaled);
        assert!(t.within_tolerance);
    }

    #[test]
    fn csv_layouts() {
        let report = verify_total_population(&binary(), &TotalPopulationOptions::new(4, 3, 0)).unwrap();
        assert!(report.to_cdf_csv().starts_with("type,mean_scaled,target,std_error\n1,"));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        /// Deeper series on the same streams differ by the omitted terms only.
        #[test]
        fn truncation_bound_covers_the_tail(
            lambda in 1.2f64..3.0,
            cross in 0.0f64..0.5,
            depth in 2usize..8,
            extra in 1usize..6,
            seed in 0u64..1000,
            per_type in proptest::bool::ANY,
        ) {
            let p = |lambda| OffspringLaw::Poisson { lambda };
            let spec = ModelSpec::new(
                vec![vec![p(lambda), p(cross)], vec![p(cross), p(lambda)]],
                vec![TailSpec::pareto(2.0); 2],
                0,
            )
            .unwrap();
            let opts = |depth| ZetaOptions {
                prefactor: Prefactor::One,
                event: if per_type { SurvivalEvent::PerTypeSum } else { SurvivalEvent::AnyType },
                ..ZetaOptions::new(depth, 40, seed)
            };
            let short = estimate_zeta(&spec, 0, &opts(depth)).unwrap();
            let long = estimate_zeta(&spec, 0, &opts(depth + extra)).unwrap();
            let gap = long.value - short.value;
            proptest::prop_assert!(gap >= -1e-12, "{gap}");
            proptest::prop_assert!(gap <= short.truncation_bound, "{gap} > {}", short.truncation_bound);
        }
    }
}
