//! Ancestors with descendants at generation n against zeta_i W.
//!
//! cargo run --release --example total_population

use mtbrw::limits::{verify_total_population, TotalPopulationOptions};
use mtbrw::model::{ModelSpec, OffspringLaw};
use mtbrw::tails::TailSpec;

fn main() {
    let binary = ModelSpec::single(OffspringLaw::Deterministic { c: 2.0 }, TailSpec::pareto(2.0));
    let p = |lambda| OffspringLaw::Poisson { lambda };
    let poisson = ModelSpec::new(
        vec![vec![p(1.2), p(0.6)], vec![p(0.3), p(0.8)]],
        vec![TailSpec::pareto(1.5), TailSpec::pareto(2.5)],
        0,
    )
    .expect("valid model");
    for (name, spec) in [("binary", binary), ("poisson", poisson)] {
        let report = verify_total_population(&spec, &TotalPopulationOptions::new(10, 1000, 1)).expect("model verifies");
        for c in report.total_population.expect("section").types {
            println!(
                "{name} type {}: mean Y_n / rho^n = {:.5}, zeta * mean W = {:.5}, se {:.1e}, ok {}",
                c.type_index + 1,
                c.mean_scaled,
                c.target,
                c.std_error,
                c.within_tolerance
            );
        }
    }
}
