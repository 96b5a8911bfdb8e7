//! Numeric theta functions and the cubic continued fraction at real `q`.
//!
//! Partial sums stop once an explicit tail bound drops below the target, so
//! every value carries a truncation guarantee rather than a heuristic stop.

use std::f64::consts::LN_10;

use crate::numkern::{BigReal, Digits, NumError, NumResult};
pub use crate::qseries::ThetaKind;

/// Largest `|q|` accepted at evaluation points.
pub const Q_CAP: f64 = 0.9;

/// Cap for integrand nodes inside quadrature; see [`theta_num_capped`].
pub const INTEGRAND_Q_CAP: f64 = 0.995;

/// Extra digits carried inside the evaluators.
const INNER_GUARD: u32 = 10;

/// Largest continued-fraction depth tried before giving up.
pub const MAX_CF_DEPTH: usize = 1_000_000;

#[derive(Debug, Clone)]
pub struct EvalPoint {
    pub q: BigReal,
    pub description: Option<String>,
}

impl EvalPoint {
    pub fn new(q: BigReal, description: Option<String>) -> NumResult<Self> {
        check_cap(&q, Q_CAP)?;
        Ok(EvalPoint { q, description })
    }
}

fn check_cap(q: &BigReal, cap: f64) -> NumResult<()> {
    let a = q.to_f64().abs();
    if !(a <= cap) {
        return Err(NumError::Domain(format!("|q| = {a} exceeds the cap {cap}")));
    }
    Ok(())
}

/// `log10` of a bound on the truncation error of [`theta_partial`] at `m`,
/// given `l = log10 |q|` with `|q| < 1`.
///
/// * `Phi`: `2 sum_{n>m} |q|^(n^2) <= 2|q|^((m+1)^2) / (1-|q|)`
/// * `Psi`: `|q|^((m+1)(m+2)/2) / (1-|q|)`
/// * `FMinus`: both pentagonal tails start at `(m+1)(3m+2)/2`, and all their
///   exponents are distinct, giving `|q|^((m+1)(3m+2)/2) / (1-|q|)`
/// * `ChiMinus`: with `s = sum_{n>m} |q|^(2n+1) <= |q|^(2m+3)/(1-q^2)`
///   the product error is at most `exp(|q|/(1-q^2)) (e^s - 1) <= exp(|q|/(1-q^2) + s) s`
pub fn tail_bound_log10(kind: ThetaKind, l: f64, m: u64) -> f64 {
    let a = 10f64.powf(l);
    let geom = -(1.0 - a).log10();
    let m = m as f64;
    match kind {
        ThetaKind::Phi => 2f64.log10() + (m + 1.0) * (m + 1.0) * l + geom,
        ThetaKind::Psi => (m + 1.0) * (m + 2.0) / 2.0 * l + geom,
        ThetaKind::FMinus => (m + 1.0) * (3.0 * m + 2.0) / 2.0 * l + geom,
        ThetaKind::ChiMinus => {
            let log_s = (2.0 * m + 3.0) * l - (1.0 - a * a).log10();
            let s = 10f64.powf(log_s);
            log_s + (a / (1.0 - a * a) + s) / LN_10
        }
    }
}

/// Smallest `m` whose tail bound is below `10^target_log10`.
pub fn terms_needed(kind: ThetaKind, q: &BigReal, target_log10: f64) -> u64 {
    let l = q.log10_abs();
    if l == f64::NEG_INFINITY {
        return 0;
    }
    let mut m = 0u64;
    while tail_bound_log10(kind, l, m) > target_log10 {
        m += 1;
    }
    m
}

/// Partial sum (or product, for `ChiMinus`) through index `m`, at the
/// precision of `q`:
/// `phi: 1 + 2 sum_{n=1..m} q^(n^2)`, `psi: sum_{n=0..m} q^(n(n+1)/2)`,
/// `f_minus: sum_{|n|<=m} (-1)^n q^(n(3n-1)/2)`, `chi_minus: prod_{n=0..m} (1 - q^(2n+1))`.
pub fn theta_partial(kind: ThetaKind, q: &BigReal, m: u64) -> BigReal {
    let d = q.precision();
    let one = BigReal::one(d);
    match kind {
        ThetaKind::Phi => {
            // q^(n^2) via ratios q^(2n+1)
            let q2 = q.square();
            let mut term = one.clone();
            let mut ratio = q.clone();
            let mut sum = BigReal::zero(d);
            for _ in 1..=m {
                term = &term * &ratio;
                ratio = &ratio * &q2;
                sum = &sum + &term;
            }
            &one + &sum.mul_i64(2)
        }
        ThetaKind::Psi => {
            let mut term = one.clone();
            let mut ratio = q.clone();
            let mut sum = one.clone();
            for _ in 1..=m {
                term = &term * &ratio;
                ratio = &ratio * q;
                sum = &sum + &term;
            }
            sum
        }
        ThetaKind::FMinus => {
            // exponents n(3n-1)/2 and n(3n+1)/2 grow by 3n-2 and 3n-1 from the previous n
            let q3 = q.powi(3).expect("positive power");
            let mut a = one.clone();
            let mut b = one.clone();
            let mut ra = q.clone();
            let mut rb = q.square();
            let mut sum = one.clone();
            for n in 1..=m {
                a = &a * &ra;
                b = &b * &rb;
                ra = &ra * &q3;
                rb = &rb * &q3;
                let pair = &a + &b;
                sum = if n % 2 == 1 { &sum - &pair } else { &sum + &pair };
            }
            sum
        }
        ThetaKind::ChiMinus => {
            let q2 = q.square();
            let mut power = q.clone();
            let mut prod = one.clone();
            for _ in 0..=m {
                prod = &prod * &(&one - &power);
                power = &power * &q2;
            }
            prod
        }
    }
}

/// Theta-type function at real `q` with `|q| <= 0.9`, accurate to `digits`.
pub fn theta_num(kind: ThetaKind, q: &BigReal, digits: Digits) -> NumResult<BigReal> {
    theta_num_capped(kind, q, digits, Q_CAP)
}

/// [`theta_num`] with a caller-chosen cap on `|q|`. The result is accurate
/// to `10^-(digits+5)` absolutely, which is what quadrature needs near the
/// upper endpoint where the functions become tiny.
pub fn theta_num_capped(kind: ThetaKind, q: &BigReal, digits: Digits, cap: f64) -> NumResult<BigReal> {
    check_cap(q, cap)?;
    let w = digits.plus(INNER_GUARD);
    let qw = q.with_precision(w);
    let m = terms_needed(kind, &qw, -(w.get() as f64) - 5.0);
    Ok(theta_partial(kind, &qw, m).with_precision(digits))
}

/// `|phi(y)|` for `y <= -INTEGRAND_Q_CAP` is below `10^PHI_VANISH_LOG10`,
/// since `phi(-t) = prod (1-t^n)/(1+t^n)` decreases on `(0, 1)`.
pub const PHI_VANISH_LOG10: f64 = -212.0;

/// Theta evaluation for integrand nodes: the cap is [`INTEGRAND_Q_CAP`] and
/// `phi` at arguments at or below `-INTEGRAND_Q_CAP` is replaced by 0, an
/// absolute error under `10^PHI_VANISH_LOG10`.
pub fn theta_num_integrand(kind: ThetaKind, y: &BigReal, digits: Digits) -> NumResult<BigReal> {
    if kind == ThetaKind::Phi && y.to_f64() <= -INTEGRAND_Q_CAP {
        if digits.get() as f64 + 5.0 > -PHI_VANISH_LOG10 {
            return Err(NumError::Domain(format!("{} digits exceed the phi cutoff bound", digits.get())));
        }
        return Ok(BigReal::zero(digits));
    }
    theta_num_capped(kind, y, digits, INTEGRAND_Q_CAP)
}

/// Continued fraction `1 + (q^k+q^2k)/(1 + ...)` evaluated bottom-up from
/// depth `depth` with tail 1; returns `t_1`.
fn cf_tail(q: &BigReal, depth: usize) -> BigReal {
    let d = q.precision();
    let one = BigReal::one(d);
    let mut powers = Vec::with_capacity(depth);
    let mut p = q.clone();
    for _ in 0..depth {
        powers.push(p.clone());
        p = &p * q;
    }
    let mut t = one.clone();
    for k in (1..=depth).rev() {
        let qk = &powers[k - 1];
        let num = qk + &qk.square();
        t = &one + &num.try_div(&t).expect("tails stay near 1 for |q| <= 0.9");
    }
    t
}

/// Cubic continued fraction by backward recurrence, doubling the depth
/// until two successive values agree to `10^-(digits+5)`.
pub fn v_cf_num(q: &BigReal, digits: Digits) -> NumResult<BigReal> {
    check_cap(q, Q_CAP)?;
    if q.is_zero() {
        return Err(NumError::Domain("V needs q != 0".into()));
    }
    let w = digits.plus(INNER_GUARD);
    let qw = q.with_precision(w);
    let tol = BigReal::pow10(-(digits.get() as i32) - 5, w);
    let mut depth = 8usize;
    let mut prev = cf_tail(&qw, depth);
    loop {
        let next_depth = depth * 2;
        if next_depth > MAX_CF_DEPTH {
            return Err(NumError::NoConvergence(format!(
                "continued fraction at depth {next_depth}"
            )));
        }
        let next = cf_tail(&qw, next_depth);
        let agree = (&next - &prev).abs() <= tol;
        prev = next;
        depth = next_depth;
        if agree {
            break;
        }
    }
    let v = qw.nth_root(3)?.try_div(&prev)?;
    Ok(v.with_precision(digits))
}

/// `V^3 = q psi^4(q^3) / (psi^4(q) - q psi^4(q^3))`, real cube root.
pub fn v_theta_num(q: &BigReal, digits: Digits) -> NumResult<BigReal> {
    check_cap(q, Q_CAP)?;
    if q.is_zero() {
        return Err(NumError::Domain("V needs q != 0".into()));
    }
    let w = digits.plus(INNER_GUARD);
    let qw = q.with_precision(w);
    let q3 = qw.powi(3)?;
    let p1 = theta_num(ThetaKind::Psi, &qw, w)?.powi(4)?;
    let p3 = theta_num(ThetaKind::Psi, &q3, w)?.powi(4)?;
    let num = &qw * &p3;
    let den = &p1 - &num;
    if den.log10_abs() < -(w.get() as f64) + 5.0 {
        return Err(NumError::Domain("theta quotient denominator vanishes".into()));
    }
    let v = num.try_div(&den)?.nth_root(3)?;
    Ok(v.with_precision(digits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkern::{const_pi, gamma_three_quarters};
    use crate::qseries::{theta_series, Rational};
    use num_bigint::BigInt;
    use num_traits::Zero;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn d(n: u32) -> Digits {
        Digits::new(n).unwrap()
    }

    fn real(s: f64, digits: u32) -> BigReal {
        BigReal::from_f64(s, d(digits)).unwrap()
    }

    fn ratio(n: i64, m: i64, digits: u32) -> BigReal {
        BigReal::from_ratio(&Rational::new(BigInt::from(n), BigInt::from(m)), d(digits))
    }

    fn close(a: &BigReal, b: &BigReal, log10_tol: f64) -> bool {
        let diff = (a - b).log10_abs();
        diff < log10_tol
    }

    #[test]
    fn phi_at_zero() {
        let z = BigReal::zero(d(20));
        for kind in ThetaKind::ALL {
            assert_eq!(theta_num(kind, &z, d(20)).unwrap(), BigReal::one(d(20)));
        }
    }

    #[test]
    fn cap_enforced() {
        let q = real(0.95, 20);
        assert!(matches!(theta_num(ThetaKind::Phi, &q, d(20)), Err(NumError::Domain(_))));
        assert!(theta_num_capped(ThetaKind::Phi, &q, d(20), INTEGRAND_Q_CAP).is_ok());
        assert!(theta_num_integrand(ThetaKind::Phi, &-real(0.999, 20), d(20)).unwrap().is_zero());
        assert!(theta_num_integrand(ThetaKind::Psi, &real(0.999, 20), d(20)).is_err());
        assert!(v_cf_num(&real(-0.91, 20), d(20)).is_err());
        assert!(EvalPoint::new(real(0.5, 20), None).is_ok());
    }

    #[test]
    fn psi_at_e_minus_pi() {
        let w = d(60);
        let pi = const_pi(w);
        let q = (-&pi).exp();
        let psi = theta_num(ThetaKind::Psi, &q, w).unwrap();
        let scale = BigReal::from_i64(2, w).pow_rational(5, 8).unwrap() * (-&pi).div_i64(8).unwrap().exp();
        let lhs = &psi * &scale;
        let rhs = pi.pow_rational(1, 4).unwrap().try_div(&gamma_three_quarters(w)).unwrap();
        assert!(close(&lhs, &rhs, -40.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn phi_matches_exact_series_at_one_tenth() {
        // sum the order-120 series exactly in rationals at q = 1/10
        let s = theta_series(ThetaKind::Phi, 120);
        let q = Rational::new(BigInt::from(1), BigInt::from(10));
        let mut acc = Rational::zero();
        let mut qp = Rational::from_integer(BigInt::from(1));
        for e in 0..=120 {
            acc += s.coeff(e).unwrap() * &qp;
            qp *= &q;
        }
        let exact = BigReal::from_ratio(&acc, d(60));
        let num = theta_num(ThetaKind::Phi, &ratio(1, 10, 60), d(60)).unwrap();
        // series truncation leaves 2 q^121 and smaller
        assert!(close(&exact, &num, -59.0));
    }

    #[test]
    fn tail_bounds_are_sound() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in ThetaKind::ALL {
            for _ in 0..6 {
                let x: f64 = rng.gen_range(-0.85..0.85);
                let q = real(x, 80);
                for m in [1u64, 3, 6, 10] {
                    let a = theta_partial(kind, &q, m);
                    let b = theta_partial(kind, &q, m + 10);
                    let bound = tail_bound_log10(kind, q.log10_abs(), m);
                    let diff = (&a - &b).log10_abs();
                    assert!(diff <= bound + 1e-9 || diff < -75.0, "{kind:?} q={x} m={m}: {diff} > {bound}");
                }
            }
        }
    }

    #[test]
    fn chi_minus_as_pentagonal_quotient() {
        let q = real(0.37, 50);
        let chi = theta_num(ThetaKind::ChiMinus, &q, d(50)).unwrap();
        let f1 = theta_num(ThetaKind::FMinus, &q, d(50)).unwrap();
        let f2 = theta_num(ThetaKind::FMinus, &q.square(), d(50)).unwrap();
        assert!(close(&chi, &f1.try_div(&f2).unwrap(), -48.0));
    }

    #[test]
    fn phi_vanish_bound_at_cap() {
        let y = -real(INTEGRAND_Q_CAP, 250);
        let v = theta_num_capped(ThetaKind::Phi, &y, d(240), INTEGRAND_Q_CAP).unwrap();
        assert!(v.signum() > 0 && v.log10_abs() < PHI_VANISH_LOG10);
    }

    #[test]
    fn v_small_q_leading_term() {
        let q = BigReal::pow10(-8, d(30));
        let cbrt = q.nth_root(3).unwrap();
        for v in [v_cf_num(&q, d(30)).unwrap(), v_theta_num(&q, d(30)).unwrap()] {
            let r = v.try_div(&cbrt).unwrap();
            assert!(close(&r, &BigReal::one(d(30)), -7.0));
        }
    }

    #[test]
    fn v_at_minus_e_minus_pi() {
        let w = d(50);
        let q = -(-const_pi(w)).exp();
        let v = v_cf_num(&q, d(40)).unwrap();
        let s3 = BigReal::from_i64(3, w).sqrt().unwrap();
        let want = (&BigReal::one(w) - &s3).div_i64(2).unwrap();
        assert!(close(&v, &want, -40.0), "{v}");
    }

    #[test]
    fn v_two_algorithms_at_one_tenth() {
        let q = ratio(1, 10, 50);
        let a = v_cf_num(&q, d(45)).unwrap();
        let b = v_theta_num(&q, d(45)).unwrap();
        assert!(close(&a, &b, -41.0));
    }

    #[test]
    fn v_two_algorithms_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut x: f64 = rng.gen_range(-0.6..0.6);
            if x.abs() < 1e-3 {
                x = 0.25;
            }
            let q = real(x, 50);
            let a = v_cf_num(&q, d(45)).unwrap();
            let b = v_theta_num(&q, d(45)).unwrap();
            assert!(close(&a, &b, -41.0), "q = {x}");
        }
    }

    #[test]
    fn one_minus_eight_v_cubed() {
        // 1 - 8 V^3(q) = phi^4(-q)/phi^4(-q^3) at q = 1/5
        let w = d(50);
        let q = ratio(1, 5, 50);
        let v = v_theta_num(&q, w).unwrap();
        let lhs = &BigReal::one(w) - &v.powi(3).unwrap().mul_i64(8);
        let phi = |x: &BigReal| theta_num(ThetaKind::Phi, x, w).unwrap();
        let rhs = phi(&-&q).powi(4).unwrap().try_div(&phi(&-&q.powi(3).unwrap()).powi(4).unwrap()).unwrap();
        assert!(close(&lhs, &rhs, -40.0));
        // the same check with psi in place of phi does not hold
        let psi = |x: &BigReal| theta_num(ThetaKind::Psi, x, w).unwrap();
        let wrong = psi(&-&q).powi(4).unwrap().try_div(&psi(&-&q.powi(3).unwrap()).powi(4).unwrap()).unwrap();
        assert!(!close(&lhs, &wrong, -2.0));
    }

    #[test]
    fn v_increasing_on_sampled_points() {
        let mut prev = BigReal::zero(d(20));
        for i in 1..12 {
            let v = v_cf_num(&ratio(i, 20, 20), d(20)).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }
}
