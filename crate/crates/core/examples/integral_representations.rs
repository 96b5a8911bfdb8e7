//! V(q) recovered from two integrals of theta products by double-exponential
//! quadrature.
//!
//! Run with `cargo run --release --example integral_representations`.

use std::time::Instant;

use cubiccf::numkern::{BigReal, Digits};
use cubiccf::quadrature::{rhs_2_1, rhs_2_2};
use cubiccf::specfun::v_cf_num;

fn main() {
    let d = Digits::new(30).unwrap();
    for x in [0.05, 0.1, 0.3] {
        let q = BigReal::from_f64(x, d).unwrap();
        let v = v_cf_num(&q, d).unwrap();
        let t = Instant::now();
        let a = rhs_2_1(&q, d).unwrap();
        let b = rhs_2_2(&q, d).unwrap();
        println!("q = {x}");
        println!("  V(q)                 {}", v.to_decimal_string(30));
        println!("  from int over (q,1)  {}  diff {}", a.to_decimal_string(30), (&a - &v).abs().to_sci_string(2));
        println!("  from int over (0,q)  {}  diff {}", b.to_decimal_string(30), (&b - &v).abs().to_sci_string(2));
        println!("  {:.2?}", t.elapsed());
    }
}
