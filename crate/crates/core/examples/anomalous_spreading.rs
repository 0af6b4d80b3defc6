//! Two classes whose combined speed exceeds both isolated speeds.
//!
//! cargo run --release --example anomalous_spreading

use mtbrw::limits::{verify_heavy, HeavyOptions};
use mtbrw::model::ModelSpec;

const CONFIG: &str = r#"{
  "types": 2,
  "offspring": [
    [{"kind": "deterministic", "c": 3}, {"kind": "poisson", "lambda": 1}],
    [{"kind": "deterministic", "c": 0}, {"kind": "bernoulli_shifted", "p": 0.5}]
  ],
  "tails": [
    {"family": "regularly_varying", "r": 3},
    {"family": "regularly_varying", "r": 1}
  ],
  "initial_type": 1
}"#;

fn main() {
    let spec = ModelSpec::from_json_str(CONFIG).expect("valid config");
    let report = verify_heavy(&spec, &HeavyOptions::new(8, 500, 1)).expect("model verifies");
    let h = report.heavy.expect("heavy section");
    println!(
        "dominant pair: class {}, type {}, rho = {}, r = {}, k = {}",
        h.dominant.class + 1,
        h.dominant.type_index + 1,
        h.dominant.rho,
        h.dominant.r,
        h.dominant.k
    );
    println!("speed {} vs isolated class speeds {:?}: anomalous = {}", h.dominant.speed, h.isolated_speeds, h.anomalous);
    println!(
        "KS(R_n / a_n) = {:.4} with prefactor {:?}, {:.4} with the other",
        h.ks_rightmost, h.zeta.prefactor, h.ks_rightmost_alternative
    );
}
