//! The survival series zeta under both prefactors and survival events.
//!
//! cargo run --release --example zeta_series

use mtbrw::limits::{estimate_zeta, Prefactor, SurvivalEvent, ZetaOptions};
use mtbrw::model::{ModelSpec, OffspringLaw};
use mtbrw::tails::TailSpec;

fn main() {
    let p = |lambda| OffspringLaw::Poisson { lambda };
    let spec = ModelSpec::new(
        vec![vec![p(1.2), p(0.6)], vec![p(0.3), p(0.8)]],
        vec![TailSpec::pareto(1.5), TailSpec::pareto(2.5)],
        0,
    )
    .expect("valid model");
    for prefactor in [Prefactor::LeftEigen, Prefactor::One] {
        for event in [SurvivalEvent::AnyType, SurvivalEvent::PerTypeSum] {
            let opts = ZetaOptions {
                prefactor,
                event,
                ..ZetaOptions::new(25, 2000, 3)
            };
            let z = estimate_zeta(&spec, 0, &opts).expect("growing type");
            println!(
                "{prefactor:?} / {event:?}: zeta = {:.4} ± {:.4} (truncation <= {:.1e})",
                z.value, z.std_error, z.truncation_bound
            );
        }
    }
}
