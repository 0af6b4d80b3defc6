//! Normalizing sequences: a_n for regularly varying tails and psi(n) for
//! semi-exponential ones.
//!
//! cargo run --example normalization

use mtbrw::normalization::{solve_psi, NormalizationTable};
use mtbrw::tails::{SlowlySelector, SlowlyVarying, TailSpec};

fn main() {
    let ns: Vec<u64> = vec![1, 5, 10, 50, 100, 1000];
    let table = NormalizationTable::heavy(&ns, 2.0, 1, &TailSpec::pareto(2.0)).expect("solvable");
    print!("a_n for rho = 2, k = 1, Pareto(2):\n{}", table.to_csv());

    let log_l = SlowlySelector::single(SlowlyVarying::new(1.0, 1.0));
    let table = NormalizationTable::semi_exponential(&ns, 0.5, &log_l).expect("solvable");
    print!("psi(n) for L(x) = 1 + ln(1 + x), r = 1/2:\n{}", table.to_csv());

    // the selector takes the pointwise minimum of its functions
    let min = SlowlySelector::new(vec![SlowlyVarying::constant(2.0), SlowlyVarying::new(1.0, 1.0)]);
    let p = solve_psi(1000, 0.5, &min).expect("solvable");
    println!("psi(1000) under min(2, 1 + ln(1 + x)) = {} (residual {:.1e})", p.value, p.residual);
}
