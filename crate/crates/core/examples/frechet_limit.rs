//! Rightmost particle of a one-class walk against its Frechet-mixture limit.
//!
//! cargo run --release --example frechet_limit

use mtbrw::limits::{verify_heavy, HeavyOptions};
use mtbrw::model::{ModelSpec, OffspringLaw};
use mtbrw::tails::TailSpec;

fn main() {
    let spec = ModelSpec::single(OffspringLaw::Deterministic { c: 2.0 }, TailSpec::pareto(2.0));
    for n in [10, 14] {
        let report = verify_heavy(&spec, &HeavyOptions::new(n, 1000, 1)).expect("model verifies");
        let h = report.heavy.expect("heavy section");
        println!(
            "n = {n}: a_n = {}, zeta = {:.6}, KS(R_n) = {:.4}, KS(M_n) = {:.4}, KS(M_n, exact law) = {:.4}",
            h.a_n.value,
            h.zeta.value,
            h.ks_rightmost,
            h.ks_max_displacement,
            h.ks_max_displacement_exact.unwrap_or(f64::NAN)
        );
    }
}
