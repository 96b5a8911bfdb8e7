//! Theta functions at real arguments with explicit truncation bounds.
//!
//! Run with `cargo run --example theta_values`.

use cubiccf::numkern::{const_pi, gamma_three_quarters, BigReal, Digits};
use cubiccf::qseries::ThetaKind;
use cubiccf::specfun::{tail_bound_log10, terms_needed, theta_num};

fn main() {
    let d = Digits::new(50).unwrap();
    let q = (-const_pi(d)).exp();

    for kind in ThetaKind::ALL {
        let m = terms_needed(kind, &q, -55.0);
        let v = theta_num(kind, &q, d).unwrap();
        println!(
            "{kind:?}(e^-pi) = {}   ({m} terms, tail < 1e{:.0})",
            v.to_decimal_string(50),
            tail_bound_log10(kind, q.log10_abs(), m)
        );
    }

    // phi(e^-pi) = pi^(1/4) / Gamma(3/4)
    let phi = theta_num(ThetaKind::Phi, &q, d).unwrap();
    let closed = const_pi(d).pow_rational(1, 4).unwrap().try_div(&gamma_three_quarters(d)).unwrap();
    println!("pi^(1/4)/Gamma(3/4) - phi(e^-pi) = {}", (&closed - &phi).to_sci_string(3));

    // functions are evaluated for |q| <= 0.9 only
    let far = BigReal::from_f64(0.95, d).unwrap();
    println!("phi(0.95): {}", theta_num(ThetaKind::Phi, &far, d).unwrap_err());
}
