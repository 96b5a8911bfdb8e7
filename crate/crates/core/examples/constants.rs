//! pi and Gamma at quarter arguments from the arithmetic-geometric mean.
//!
//! Run with `cargo run --example constants`.

use cubiccf::numkern::{agm, const_pi, gamma_one_quarter, gamma_three_quarters, BigReal, Digits};

fn main() {
    let d = Digits::new(80).unwrap();
    let pi = const_pi(d);
    let g14 = gamma_one_quarter(d);
    let g34 = gamma_three_quarters(d);
    println!("pi         = {}", pi.to_decimal_string(80));
    println!("Gamma(1/4) = {}", g14.to_decimal_string(80));
    println!("Gamma(3/4) = {}", g34.to_decimal_string(80));

    // reflection: Gamma(1/4) Gamma(3/4) = pi sqrt(2)
    let two = BigReal::from_i64(2, d);
    let gap = &(&g14 * &g34) - &(&pi * &two.sqrt().unwrap());
    println!("Gamma(1/4)Gamma(3/4) - pi sqrt(2) = {}", gap.to_sci_string(3));

    // the lemniscate constant agm(1, sqrt 2)
    let m = agm(&BigReal::one(d), &two.sqrt().unwrap()).unwrap();
    println!("agm(1, sqrt 2) = {}", m.to_decimal_string(40));
}
