//! Exact q-series arithmetic: expand V(q) from its continued fraction and
//! check a theta-quotient identity coefficient by coefficient.
//!
//! Run with `cargo run --example series_identity`.

use cubiccf::qseries::{cf_series, theta_series, QSeries, Rational, ThetaKind};

fn main() {
    let order = 60;
    let v = cf_series(order);
    println!("V(q) = {}", v.truncate(3 * 8));

    // 1 + 1/V^3(q) = psi^4(q) / (q psi^4(q^3))
    let one = QSeries::one(1, 3 * order);
    let lhs = one.add(&v.pow_int(-3).unwrap()).unwrap();
    let psi = theta_series(ThetaKind::Psi, order);
    let psi3 = psi.substitute_monomial(1, 3.into()).unwrap();
    let q = QSeries::monomial(1, 1, Rational::from_integer(1.into()), order);
    let rhs = psi.pow_int(4).unwrap().div(&q.mul(&psi3.pow_int(4).unwrap()).unwrap()).unwrap();

    let diff = lhs.sub(&rhs).unwrap();
    println!("lhs known through q^{}, rhs through q^{}", lhs.order(), rhs.order());
    match diff.first_nonzero() {
        None => println!("lhs - rhs = {diff}: identity holds to the common order"),
        Some((e, c)) => println!("mismatch at x^{e}: {c}"),
    }

    // the product and sum forms of f(-q) agree
    let f = theta_series(ThetaKind::FMinus, 40);
    println!("f(-q) = {}", f.truncate(16));
}
