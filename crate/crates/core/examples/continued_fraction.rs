//! The cubic continued fraction computed by backward recurrence and by its
//! theta-quotient form.
//!
//! Run with `cargo run --example continued_fraction`.

use cubiccf::numkern::{const_pi, BigReal, Digits};
use cubiccf::specfun::{v_cf_num, v_theta_num};

fn main() {
    let d = Digits::new(60).unwrap();
    for x in [-0.5, -0.1, 0.05, 0.3, 0.6, 0.85] {
        let q = BigReal::from_f64(x, d).unwrap();
        let cf = v_cf_num(&q, d).unwrap();
        let th = v_theta_num(&q, d).unwrap();
        println!("V({x:>5}) = {}  |cf - theta| = {}", cf.to_decimal_string(30), (&cf - &th).abs().to_sci_string(2));
    }

    // V(-e^-pi) = (1 - sqrt 3)/2
    let q = -(-const_pi(d)).exp();
    let v = v_cf_num(&q, d).unwrap();
    let three = BigReal::from_i64(3, d);
    let closed = (BigReal::one(d) - three.sqrt().unwrap()).div_i64(2).unwrap();
    println!("V(-e^-pi)        = {}", v.to_decimal_string(50));
    println!("(1 - sqrt(3))/2  = {}", closed.to_decimal_string(50));
}
