//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 the model or
//! request fails a precondition, 4 the population cap was hit.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::classes::{self, ClassDecomposition};
use crate::engine::{self, EngineError, Simulator, TrialOptions, WMode, DEFAULT_CAP};
use crate::limits::{self, HeavyOptions, LimitError, Prefactor, SemiExpOptions, SurvivalEvent, TotalPopulationOptions, ZetaOptions};
use crate::model::{validate, validate_with, ModelSpec, ValidationProfile};
use crate::normalization::NormalizationTable;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "mtbrw", version, about = "Multi-type branching random walks with heavy-tailed displacements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Class structure, Perron data and dominant pair of the mean matrix.
    Analyze(AnalyzeArgs),
    /// Normalizing sequence a_n or psi(n) as CSV.
    Normalize(NormalizeArgs),
    /// Run trials and write per-trial observables.
    Simulate(SimulateArgs),
    /// Compare simulated trials with a limit statement.
    Verify(VerifyArgs),
    /// Estimate the survival series zeta for one start type.
    Zeta(ZetaArgs),
}

#[derive(Debug, Args, Serialize)]
struct AnalyzeArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct NormalizeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated generations.
    #[arg(long, value_delimiter = ',', conflicts_with = "n_max")]
    n_list: Vec<u64>,
    /// All generations 1..=n_max.
    #[arg(long)]
    n_max: Option<u64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Also count ancestors with descendants at generation n.
    #[arg(long)]
    ancestry: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Theorem {
    /// Regularly varying tails, one class.
    #[value(name = "1")]
    HeavyIrreducible,
    /// Semi-exponential tails, one class.
    #[value(name = "2")]
    SemiIrreducible,
    /// Regularly varying tails, several classes.
    #[value(name = "3")]
    HeavyReducible,
    /// Semi-exponential tails, several classes.
    #[value(name = "4")]
    SemiReducible,
    /// Ancestors with descendants at generation n.
    #[value(name = "lemma-Y", alias = "lemma-y")]
    LemmaY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PrefactorArg {
    One,
    LeftEigen,
}

impl From<PrefactorArg> for Prefactor {
    fn from(p: PrefactorArg) -> Self {
        match p {
            PrefactorArg::One => Prefactor::One,
            PrefactorArg::LeftEigen => Prefactor::LeftEigen,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SurvivalArg {
    AnyType,
    PerTypeSum,
}

impl From<SurvivalArg> for SurvivalEvent {
    fn from(s: SurvivalArg) -> Self {
        match s {
            SurvivalArg::AnyType => SurvivalEvent::AnyType,
            SurvivalArg::PerTypeSum => SurvivalEvent::PerTypeSum,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    theorem: Theorem,
    /// Horizon for theorems 1, 3 and lemma-Y.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated horizons for theorems 2 and 4.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Prefactor of the survival series (default: left-eigen for one class, one otherwise).
    #[arg(long)]
    prefactor: Option<PrefactorArg>,
    #[arg(long, value_enum, default_value_t = SurvivalArg::AnyType)]
    survival: SurvivalArg,
    /// Start the survival series at depth 1.
    #[arg(long)]
    zeta_from_one: bool,
    #[arg(long, default_value_t = 30)]
    zeta_depth: usize,
    #[arg(long, default_value_t = 4000)]
    zeta_trials: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ZetaArgs {
    #[arg(long)]
    config: PathBuf,
    /// 1-based start type (default: the dominant type, else the initial type).
    #[arg(long = "type")]
    start_type: Option<usize>,
    #[arg(long, default_value_t = 30)]
    depth: usize,
    #[arg(long, default_value_t = 4000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = PrefactorArg::LeftEigen)]
    prefactor: PrefactorArg,
    #[arg(long, value_enum, default_value_t = SurvivalArg::AnyType)]
    survival: SurvivalArg,
    #[arg(long)]
    zeta_from_one: bool,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn precondition(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PRECONDITION,
            message: message.into(),
        }
    }
}

impl From<LimitError> for Failure {
    fn from(e: LimitError) -> Self {
        let code = match &e {
            LimitError::Engine(EngineError::PopulationCapExceeded { .. }) | LimitError::TooFewTrials { .. } => EXIT_CAP,
            LimitError::Engine(EngineError::InvalidModel(_)) => EXIT_CONFIG,
            e if e.is_precondition() => EXIT_PRECONDITION,
            _ => EXIT_CAP,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<classes::ClassError> for Failure {
    fn from(e: classes::ClassError) -> Self {
        Failure::precondition(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::config(format!("i/o error: {e}"))
    }
}

/// Provenance written next to every output directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub subcommand: String,
    pub parameters: serde_json::Value,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
}

/// Run the CLI on `argv` (program name first), printing to stdout/stderr.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Normalize(a) => normalize(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Zeta(a) => zeta(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load(path: &Path) -> Result<(ModelSpec, String), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
    let spec = ModelSpec::from_json_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let report = validate(&spec);
    if report.has_parameter_errors() {
        return Err(Failure::config(format!("{}:\n{report}", path.display())));
    }
    Ok((spec, hex::encode(Sha256::digest(text.as_bytes()))))
}

fn decompose(spec: &ModelSpec) -> Result<ClassDecomposition, Failure> {
    Ok(classes::analyze(&spec.mean_matrix(), Some(spec.initial_type()))?)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339()
}

/// Write through a temporary file in the same directory, then rename.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let tmp = path.with_extension("partial");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_manifest<A: Serialize>(
    dir: &Path,
    subcommand: &str,
    args: &A,
    hash: &str,
    seed: Option<u64>,
    started_at: String,
) -> Result<(), Failure> {
    let manifest = RunManifest {
        config_sha256: hash.to_string(),
        seed,
        subcommand: subcommand.to_string(),
        parameters: serde_json::to_value(args).expect("arguments serialize"),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_at,
        finished_at: now(),
    };
    write_atomic(&dir.join("manifest.json"), pretty(&manifest).as_bytes())
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn one_based(types: &[usize]) -> Vec<usize> {
    types.iter().map(|t| t + 1).collect()
}

fn analyze(args: &AnalyzeArgs) -> Result<(), Failure> {
    let (spec, _) = load(&args.config)?;
    let m = spec.mean_matrix();
    let dec = decompose(&spec)?;
    let tails = spec.tails();
    let class_report: Vec<_> = (0..dec.class_count())
        .map(|a| {
            let s = &dec.spectra[a];
            json!({
                "types": one_based(&dec.condensation.classes[a]),
                "active": dec.active[a],
                "rho": s.rho,
                "left": s.left,
                "right": s.right,
                "primitive_power": s.primitive_power,
                "residual": classes::perron_residual(&dec.condensation.block(&m, a), s.rho, &s.left, &s.right),
            })
        })
        .collect();
    let dominant = if tails.iter().all(|t| t.is_regularly_varying()) {
        let p = classes::dominant_pair_heavy(&dec, tails)?;
        json!({
            "family": "regularly_varying",
            "class": p.class + 1,
            "type": p.type_index + 1,
            "rho": p.rho,
            "r": p.r,
            "k": p.k,
            "speed": p.speed,
            "unique": p.unique,
            "isolated_speeds": dec.isolated_speeds(tails),
        })
    } else if tails.iter().all(|t| t.is_semi_exponential()) {
        let s = classes::dominant_data_semiexp(&dec, tails)?;
        json!({
            "family": "semi_exponential",
            "r": s.r,
            "attaining_types": one_based(&s.attaining),
            "preceding_classes": one_based(&s.preceding),
            "rho": s.rho,
            "target": s.target(),
        })
    } else {
        serde_json::Value::Null
    };
    let report = json!({
        "types": spec.types(),
        "initial_type": spec.initial_type() + 1,
        "mean_matrix": m,
        "classes": class_report,
        "order": dec.condensation.precedes,
        "rho_pre": dec.rho_pre,
        "growth": dec.growth,
        "irreducible": dec.is_irreducible(),
        "dominant": dominant,
        "validation": validate(&spec).violations,
    });
    print!("{}", pretty(&report));
    Ok(())
}

fn normalize(args: &NormalizeArgs) -> Result<(), Failure> {
    let (spec, hash) = load(&args.config)?;
    let ns: Vec<u64> = match args.n_max {
        Some(n) => (1..=n).collect(),
        None if !args.n_list.is_empty() => args.n_list.clone(),
        None => return Err(Failure::config("give --n-list or --n-max")),
    };
    let dec = decompose(&spec)?;
    let tails = spec.tails();
    let table = if tails.iter().all(|t| t.is_regularly_varying()) {
        let p = classes::dominant_pair_heavy(&dec, tails)?;
        NormalizationTable::heavy(&ns, p.rho, p.k, &tails[p.type_index])
    } else if tails.iter().all(|t| t.is_semi_exponential()) {
        let s = classes::dominant_data_semiexp(&dec, tails)?;
        NormalizationTable::semi_exponential(&ns, s.r, &s.selector)
    } else {
        return Err(Failure::precondition("tails mix both families"));
    }
    .map_err(|e| Failure::precondition(e.to_string()))?;
    match &args.out {
        Some(path) => {
            let started = now();
            write_atomic(path, table.to_csv().as_bytes())?;
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                write_manifest(dir, "normalize", args, &hash, None, started)?;
            }
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}

/// Martingale estimate used in `trials.csv`.
fn default_w_mode(spec: &ModelSpec, dec: &ClassDecomposition) -> WMode {
    if dec.is_irreducible() {
        return WMode::irreducible(dec, spec.initial_type());
    }
    if let Ok(p) = classes::dominant_pair_heavy(dec, spec.tails()) {
        return WMode::reducible(&p);
    }
    // fastest-growing type, smallest index on ties
    let i = (0..spec.types())
        .filter(|&j| dec.active[dec.class_of(j)])
        .max_by(|&a, &b| {
            dec.rho_pre[a]
                .total_cmp(&dec.rho_pre[b])
                .then(dec.growth[a].cmp(&dec.growth[b]))
                .then(b.cmp(&a))
        })
        .unwrap_or(spec.initial_type());
    WMode::Reducible {
        index: i,
        k: dec.growth[i],
        rho: dec.rho_pre[i],
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let started = now();
    let (spec, hash) = load(&args.config)?;
    if args.n == 0 {
        return Err(Failure::config("--n must be at least 1"));
    }
    let dec = decompose(&spec)?;
    let sim = Simulator::new(&spec).map_err(|e| Failure::config(e.to_string()))?;
    let mut opts = TrialOptions::new(args.n)
        .with_cap(args.cap)
        .with_w(default_w_mode(&spec, &dec));
    if args.ancestry {
        opts = opts.with_ancestry();
    }
    let batch = engine::run_trials(&sim, &opts, args.trials, args.seed);
    std::fs::create_dir_all(&args.out)?;
    let mut trials = String::from("trial,R_n,M_max,W_hat,extinct,capped\n");
    let mut counts = String::from("trial,k,type,Z\n");
    let mut ancestors = String::from("trial,type,Y\n");
    for t in &batch.results {
        trials.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t.index,
            fmt_opt(t.rightmost),
            fmt_opt(t.max_displacement_overall()),
            fmt_opt(t.w_hat),
            t.is_extinct(),
            t.capped
        ));
        for (k, z) in t.counts.iter().enumerate() {
            for (j, c) in z.iter().enumerate() {
                counts.push_str(&format!("{},{},{},{}\n", t.index, k, j + 1, c));
            }
        }
        if let Some(y) = &t.ancestors {
            for (j, c) in y.iter().enumerate() {
                ancestors.push_str(&format!("{},{},{}\n", t.index, j + 1, c));
            }
        }
    }
    write_atomic(&args.out.join("trials.csv"), trials.as_bytes())?;
    write_atomic(&args.out.join("counts.csv"), counts.as_bytes())?;
    if args.ancestry {
        write_atomic(&args.out.join("ancestors.csv"), ancestors.as_bytes())?;
    }
    write_manifest(&args.out, "simulate", args, &hash, Some(args.seed), started)?;
    println!(
        "{} trials, {} extinct, {} capped{}",
        batch.results.len(),
        batch.extinct,
        batch.capped,
        if batch.cap_bias() { " (cap bias)" } else { "" }
    );
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let started = now();
    let (spec, hash) = load(&args.config)?;
    let dec = decompose(&spec)?;
    let wants_irreducible = matches!(args.theorem, Theorem::HeavyIrreducible | Theorem::SemiIrreducible);
    let wants_reducible = matches!(args.theorem, Theorem::HeavyReducible | Theorem::SemiReducible);
    if (wants_irreducible && !dec.is_irreducible()) || (wants_reducible && dec.is_irreducible()) {
        return Err(Failure::precondition(format!(
            "theorem {:?} does not match the class structure ({} reachable classes)",
            args.theorem,
            dec.active.iter().filter(|&&a| a).count()
        )));
    }
    let report_assumptions = |require_survival| {
        let r = validate_with(&spec, ValidationProfile { require_survival });
        if r.is_clean() {
            Ok(())
        } else {
            Err(Failure::precondition(format!("model violates the assumptions:\n{r}")))
        }
    };
    let horizon = || args.n.ok_or_else(|| Failure::config("--n is required for this theorem"));
    let report = match args.theorem {
        Theorem::HeavyIrreducible | Theorem::HeavyReducible => {
            report_assumptions(wants_reducible)?;
            let mut opts = HeavyOptions::new(horizon()?, args.trials, args.seed);
            opts.cap = args.cap;
            opts.prefactor = args.prefactor.map(Prefactor::from);
            opts.event = args.survival.into();
            opts.from_one = args.zeta_from_one;
            opts.zeta_depth = args.zeta_depth;
            opts.zeta_trials = args.zeta_trials;
            limits::verify_heavy(&spec, &opts)?
        }
        Theorem::SemiIrreducible | Theorem::SemiReducible => {
            report_assumptions(wants_reducible)?;
            let ns = if args.n_list.is_empty() {
                vec![horizon()?]
            } else {
                args.n_list.clone()
            };
            let mut opts = SemiExpOptions::new(ns, args.trials, args.seed);
            opts.cap = args.cap;
            limits::verify_semiexp(&spec, &opts)?
        }
        Theorem::LemmaY => {
            report_assumptions(false)?;
            let mut opts = TotalPopulationOptions::new(horizon()?, args.trials, args.seed);
            opts.cap = args.cap;
            opts.zeta_trials = args.zeta_trials;
            limits::verify_total_population(&spec, &opts)?
        }
    };
    std::fs::create_dir_all(&args.out)?;
    write_atomic(&args.out.join("report.json"), pretty(&report).as_bytes())?;
    write_atomic(&args.out.join("cdf.csv"), report.to_cdf_csv().as_bytes())?;
    write_manifest(&args.out, "verify", args, &hash, Some(args.seed), started)?;
    print_summary(&report);
    Ok(())
}

fn print_summary(report: &limits::VerificationReport) {
    let acc = &report.accounting;
    println!(
        "mode {:?}: {} trials, {} extinct, {} capped",
        report.mode, acc.trials, acc.extinct, acc.capped
    );
    if let Some(h) = &report.heavy {
        println!(
            "a_n = {:e}, zeta = {:.6} (alternative {:.6}), KS(R) = {:.4} (alternative {:.4}), KS(M) = {:.4}",
            h.a_n.value,
            h.zeta.value,
            h.zeta_alternative.value,
            h.ks_rightmost,
            h.ks_rightmost_alternative,
            h.ks_max_displacement
        );
        if let Some(ks) = h.ks_max_displacement_exact {
            println!("KS(M, exact law) = {ks:.4}");
        }
    }
    if let Some(s) = &report.semi_exponential {
        for r in &s.rows {
            println!("n = {}: median {:.6} [q10 {:.6}, q90 {:.6}], target {:.6}", r.n, r.median, r.q10, r.q90, s.target);
        }
        println!("trend ok: {}, band ok: {}", s.trend_ok, s.band_ok);
    }
    if let Some(t) = &report.total_population {
        for c in &t.types {
            println!(
                "type {}: mean scaled Y {:.6}, zeta * mean W {:.6}, se {:.2e}, ok {}",
                c.type_index + 1,
                c.mean_scaled,
                c.target,
                c.std_error,
                c.within_tolerance
            );
        }
    }
}

fn zeta(args: &ZetaArgs) -> Result<(), Failure> {
    let (spec, _) = load(&args.config)?;
    let dec = decompose(&spec)?;
    let start = match args.start_type {
        Some(0) => return Err(Failure::config("--type is 1-based")),
        Some(t) if t > spec.types() => return Err(Failure::config(format!("--type {t} exceeds {}", spec.types()))),
        Some(t) => t - 1,
        None => classes::dominant_pair_heavy(&dec, spec.tails())
            .map(|p| p.type_index)
            .unwrap_or(spec.initial_type()),
    };
    let opts = ZetaOptions {
        depth: args.depth,
        trials: args.trials,
        seed: args.seed,
        prefactor: args.prefactor.into(),
        event: args.survival.into(),
        from_one: args.zeta_from_one,
    };
    let z = limits::estimate_zeta(&spec, start, &opts)?;
    print!("{}", pretty(&z));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(name: &str) -> String {
        format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn run(args: &[&str]) -> i32 {
        dispatch(std::iter::once("mtbrw").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(&["analyze", "--config", "/nonexistent/model.json"]), EXIT_CONFIG);
        assert_eq!(run(&["analyze", "--config", &config("critical.json"), "--bogus"]), EXIT_CONFIG);
        assert_eq!(run(&["frobnicate"]), EXIT_CONFIG);
        // verify demands an explicit seed
        assert_eq!(run(&["verify", "--config", &config("binary_pareto.json"), "--theorem", "1", "--n", "3", "--out", "x"]), EXIT_CONFIG);
    }

    #[test]
    fn missing_config_names_the_path() {
        let e = load(Path::new("/nonexistent/model.json")).unwrap_err();
        assert_eq!(e.code, EXIT_CONFIG);
        assert!(e.message.contains("/nonexistent/model.json"), "{}", e.message);
    }

    #[test]
    fn malformed_config_exits_2() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"types": 1, "offspring": [[{"kind": "deterministic", "c": 2}]], "tails": []}"#).unwrap();
        assert_eq!(run(&["analyze", "--config", path.to_str().unwrap()]), EXIT_CONFIG);
    }

    #[test]
    fn critical_model_fails_preconditions() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("v");
        let code = run(&[
            "verify", "--config", &config("critical.json"), "--theorem", "1", "--n", "5", "--trials", "10",
            "--seed", "1", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_PRECONDITION);
        assert!(!out.join("report.json").exists());
    }

    #[test]
    fn theorem_must_match_class_structure() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("v");
        let code = run(&[
            "verify", "--config", &config("anomalous_spreading.json"), "--theorem", "1", "--n", "3", "--seed", "1",
            "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_PRECONDITION);
    }

    #[test]
    fn analyze_and_zeta_succeed() {
        assert_eq!(run(&["analyze", "--config", &config("anomalous_spreading.json")]), EXIT_OK);
        assert_eq!(run(&["zeta", "--config", &config("binary_pareto.json"), "--depth", "5", "--trials", "4"]), EXIT_OK);
        assert_eq!(run(&["zeta", "--config", &config("binary_pareto.json"), "--type", "2"]), EXIT_CONFIG);
    }

    #[test]
    fn normalize_writes_csv_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a_n.csv");
        let code = run(&["normalize", "--config", &config("binary_pareto.json"), "--n-list", "2,4,10", "--out", out.to_str().unwrap()]);
        assert_eq!(code, EXIT_OK);
        let csv = std::fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,value,residual");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("10,3.2e1,"), "{}", lines[3]);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["subcommand"], "normalize");
        let text = std::fs::read(config("binary_pareto.json")).unwrap();
        assert_eq!(manifest["config_sha256"], hex::encode(Sha256::digest(&text)));
    }

    #[test]
    fn simulate_writes_per_trial_rows() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sim");
        let code = run(&[
            "simulate", "--config", &config("binary_pareto.json"), "--n", "4", "--trials", "5", "--seed", "3",
            "--ancestry", "--out", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        let trials = std::fs::read_to_string(out.join("trials.csv")).unwrap();
        assert_eq!(trials.lines().count(), 6);
        let counts = std::fs::read_to_string(out.join("counts.csv")).unwrap();
        assert!(counts.lines().any(|l| l == "0,4,1,16"));
        let ancestors = std::fs::read_to_string(out.join("ancestors.csv")).unwrap();
        assert!(ancestors.lines().any(|l| l == "0,1,30"));
        assert_eq!(run(&[
            "simulate", "--config", &config("binary_pareto.json"), "--n", "10", "--trials", "2", "--seed", "3",
            "--cap", "100", "--out", out.to_str().unwrap(),
        ]), EXIT_OK);
    }

    #[test]
    fn verify_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let go = |name: &str| {
            let out = dir.path().join(name);
            let code = run(&[
                "verify", "--config", &config("two_type_irreducible.json"), "--theorem", "1", "--n", "6",
                "--trials", "50", "--seed", "11", "--zeta-trials", "200", "--out", out.to_str().unwrap(),
            ]);
            assert_eq!(code, EXIT_OK);
            std::fs::read(out.join("cdf.csv")).unwrap()
        };
        assert_eq!(go("a"), go("b"));
    }
}
