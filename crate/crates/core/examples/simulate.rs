//! Parallel trials of a two-type walk with per-trial observables.
//!
//! cargo run --release --example simulate

use mtbrw::engine::{run_trials, Simulator, TrialOptions, WMode};
use mtbrw::model::{ModelSpec, OffspringLaw};
use mtbrw::stats::Summary;
use mtbrw::tails::TailSpec;

fn main() {
    let p = |lambda| OffspringLaw::Poisson { lambda };
    let spec = ModelSpec::new(
        vec![vec![p(1.2), p(0.6)], vec![p(0.3), p(0.8)]],
        vec![TailSpec::pareto(1.5), TailSpec::pareto(2.5)],
        0,
    )
    .expect("valid model");
    let dec = mtbrw::classes::analyze(&spec.mean_matrix(), Some(0)).expect("analyzable");
    let sim = Simulator::new(&spec).expect("valid model");
    let opts = TrialOptions::new(10)
        .with_ancestry()
        .with_w(WMode::irreducible(&dec, 0));
    let batch = run_trials(&sim, &opts, 500, 42);
    println!("{} trials, {} extinct, {} capped", batch.results.len(), batch.extinct, batch.capped);

    let alive: Vec<_> = batch.surviving().collect();
    let rightmost: Vec<f64> = alive.iter().filter_map(|t| t.rightmost).collect();
    let w: Vec<f64> = alive.iter().filter_map(|t| t.w_hat).collect();
    let y: Vec<f64> = alive.iter().map(|t| t.ancestors.as_ref().expect("tracked").iter().sum::<u64>() as f64).collect();
    println!("R_10 among survivors: {:?}", Summary::of(&rightmost));
    println!("W estimate:           {:?}", Summary::of(&w));
    println!("ancestors Y_10:       {:?}", Summary::of(&y));
}
