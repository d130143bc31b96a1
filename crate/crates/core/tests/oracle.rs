//! Regenerates the brute-force optima frozen in the acceptance suite.
//!
//! cargo test --release --test oracle -- --ignored --nocapture

mod common;

use coop_relay::Scheme;

#[test]
#[ignore = "slow; prints constants for the acceptance suite"]
fn print_brute_force_optima() {
    println!("const ORACLE_OPTIMA: [[f64; 5]; 5] = [");
    for k in 0..common::CANONICAL.len() {
        let c = common::canonical_config(k);
        let rates: Vec<String> = Scheme::ALL
            .iter()
            .map(|&s| {
                let (rate, x) = common::brute_force_optimum(s, &c);
                eprintln!("{:?} {s} {rate:.15} at {x:?}", common::CANONICAL[k]);
                format!("{rate:.15}")
            })
            .collect();
        println!("    [{}],", rates.join(", "));
    }
    println!("];");
}
