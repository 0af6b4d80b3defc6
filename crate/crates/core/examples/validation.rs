//! Model checks before any simulation.
//!
//! cargo run --example validation

use mtbrw::model::{validate, validate_with, ModelSpec, OffspringLaw, ValidationProfile};
use mtbrw::tails::TailSpec;

fn main() {
    let critical = ModelSpec::single(OffspringLaw::Deterministic { c: 1.0 }, TailSpec::pareto(2.0));
    println!("critical:\n{}", validate(&critical));

    let poisson = ModelSpec::single(OffspringLaw::Poisson { lambda: 1.5 }, TailSpec::pareto(2.0));
    println!("poisson: clean = {}", validate(&poisson).is_clean());
    let strict = validate_with(&poisson, ValidationProfile { require_survival: true });
    println!("poisson, survival required:\n{strict}");

    let bad = r#"{"types": 1, "offspring": [[{"kind": "geometric", "p": 1.5}]],
                  "tails": [{"family": "semi_exponential", "r": 2}], "initial_type": 1}"#;
    match ModelSpec::from_json_str(bad) {
        Ok(spec) => println!("bad:\n{}", validate(&spec)),
        Err(e) => println!("bad: {e}"),
    }
}
