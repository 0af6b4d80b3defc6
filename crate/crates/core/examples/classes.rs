//! Class structure, Perron data and the dominant pair of a reducible model.
//!
//! cargo run --example classes

use mtbrw::classes::{self, perron_residual};
use mtbrw::model::{ModelSpec, OffspringLaw};
use mtbrw::tails::TailSpec;

fn main() {
    let det = |c| OffspringLaw::Deterministic { c };
    let spec = ModelSpec::new(
        vec![vec![det(3.0), OffspringLaw::Poisson { lambda: 1.0 }], vec![det(0.0), OffspringLaw::BernoulliShifted { p: 0.5 }]],
        vec![TailSpec::pareto(3.0), TailSpec::pareto(1.0)],
        0,
    )
    .expect("valid model");
    let m = spec.mean_matrix();
    let dec = classes::analyze(&m, Some(spec.initial_type())).expect("analyzable");
    for a in 0..dec.class_count() {
        let s = &dec.spectra[a];
        let block = dec.condensation.block(&m, a);
        println!(
            "class {} types {:?}: rho = {}, u = {:?}, v = {:?}, residual {:.1e}",
            a + 1,
            dec.condensation.classes[a].iter().map(|t| t + 1).collect::<Vec<_>>(),
            s.rho,
            s.left,
            s.right,
            perron_residual(&block, s.rho, &s.left, &s.right)
        );
    }
    println!("rho_j = {:?}, k_j = {:?}", dec.rho_pre, dec.growth);
    let pair = classes::dominant_pair_heavy(&dec, spec.tails()).expect("dominant pair");
    println!(
        "dominant pair: class {}, type {}, speed {} (isolated classes {:?})",
        pair.class + 1,
        pair.type_index + 1,
        pair.speed,
        dec.isolated_speeds(spec.tails())
    );
}
