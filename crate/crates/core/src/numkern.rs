//! Precision-carrying real arithmetic and the constants the numeric engine
//! needs (π, Γ(3/4), the arithmetic-geometric mean).
//!
//! A [`BigReal`] pairs a binary big float with a working precision measured
//! in decimal digits. Binary operations produce a value whose precision is
//! the smaller of the operand precisions, so precision can only shrink as it
//! flows through a computation. Non-finite results never escape: every
//! operation that could produce one returns a [`NumError`] instead.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use dashu_float::ops::SquareRoot;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::{IBig, UBig};
use dashu_int::ops::BitTest;
use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use thiserror::Error;

type Float = FBig<HalfEven, 2>;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Extra binary digits carried inside a single elementary evaluation.
const GUARD_BITS: usize = 24;

/// Environment variable overriding the base number of guard digits.
pub const GUARD_ENV: &str = "CUBICCF_PRECISION_GUARD";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precision of {0} digits is below the minimum of {min}", min = Digits::MIN)]
    PrecisionUnderflow(u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("no convergence: {0}")]
    NoConvergence(String),
}

pub type NumResult<T> = Result<T, NumError>;

/// Working precision in decimal digits; always at least [`Digits::MIN`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Digits(u32);

impl Digits {
    pub const MIN: u32 = 10;

    pub fn new(digits: u32) -> NumResult<Self> {
        if digits < Self::MIN {
            Err(NumError::PrecisionUnderflow(digits))
        } else {
            Ok(Digits(digits))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn plus(self, extra: u32) -> Digits {
        Digits(self.0 + extra)
    }

    fn bits(self) -> usize {
        (self.0 as f64 * LOG2_10).ceil() as usize + 2
    }
}

impl fmt::Display for Digits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Guard digits for an expression with `expr_size` nodes:
/// base (default 10, overridable through [`GUARD_ENV`]) plus
/// `ceil(log10(expr_size))`.
pub fn guard_digits(expr_size: usize) -> u32 {
    let base = std::env::var(GUARD_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<u32>().ok())
        .unwrap_or(10);
    let size = expr_size.max(1) as f64;
    base + size.log10().ceil() as u32
}

/// Requested digits plus the guard policy of [`guard_digits`].
pub fn working_digits(requested: Digits, expr_size: usize) -> Digits {
    requested.plus(guard_digits(expr_size))
}

#[derive(Clone)]
pub struct BigReal {
    value: Float,
    digits: Digits,
}

fn ibig_from(n: &BigInt) -> IBig {
    let (sign, bytes) = n.to_bytes_le();
    let mag = IBig::from(UBig::from_le_bytes(&bytes));
    if sign == Sign::Minus {
        -mag
    } else {
        mag
    }
}

fn round_to(value: Float, bits: usize) -> Float {
    value.with_precision(bits).value()
}

impl BigReal {
    fn wrap(value: Float, digits: Digits) -> Self {
        BigReal {
            value: round_to(value, digits.bits()),
            digits,
        }
    }

    /// The raw value at `bits` precision, for internal extended computations.
    fn widened(&self, extra_bits: usize) -> Float {
        self.value.clone().with_precision(self.digits.bits() + extra_bits).value()
    }

    pub fn from_i64(v: i64, digits: Digits) -> Self {
        Self::wrap(Float::from(v), digits)
    }

    pub fn zero(digits: Digits) -> Self {
        Self::from_i64(0, digits)
    }

    pub fn one(digits: Digits) -> Self {
        Self::from_i64(1, digits)
    }

    pub fn from_bigint(n: &BigInt, digits: Digits) -> Self {
        Self::wrap(Float::from(ibig_from(n)), digits)
    }

    pub fn from_ratio(r: &BigRational, digits: Digits) -> Self {
        let bits = digits.bits() + GUARD_BITS;
        let num = Float::from(ibig_from(r.numer())).with_precision(bits).value();
        let den = Float::from(ibig_from(r.denom())).with_precision(bits).value();
        Self::wrap(num / den, digits)
    }

    /// Nearest representable value to an `f64`; exact for finite inputs.
    pub fn from_f64(x: f64, digits: Digits) -> NumResult<Self> {
        let v = Float::try_from(x).map_err(|_| NumError::Domain(format!("non-finite f64 {x}")))?;
        Ok(Self::wrap(v, digits))
    }

    /// `10^k` at the given precision.
    pub fn pow10(k: i32, digits: Digits) -> Self {
        let ten = Self::from_i64(10, digits);
        let mag = ten.powi_unsigned(k.unsigned_abs() as u64);
        if k >= 0 {
            mag
        } else {
            mag.recip().expect("10^k is nonzero")
        }
    }

    pub fn precision(&self) -> Digits {
        self.digits
    }

    /// Same value, re-tagged (and rounded if narrowing) to `digits`.
    pub fn with_precision(&self, digits: Digits) -> Self {
        Self::wrap(self.value.clone(), digits)
    }

    pub fn is_zero(&self) -> bool {
        self.value.repr().is_zero()
    }

    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            0
        } else if self.value.repr().significand() < &IBig::ZERO {
            -1
        } else {
            1
        }
    }

    pub fn is_negative(&self) -> bool {
        self.signum() < 0
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().value()
    }

    /// `log10 |x|` as an `f64`, valid far outside the `f64` exponent range.
    /// Returns `-inf` for zero.
    pub fn log10_abs(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        let repr = self.value.repr();
        let sig = repr.significand();
        let bit_len = if sig < &IBig::ZERO {
            (-sig.clone()).bit_len()
        } else {
            sig.bit_len()
        };
        // keep 60 leading bits of the significand
        let shift = bit_len.saturating_sub(60);
        let top: f64 = (sig.clone() >> shift).to_f64().value().abs();
        (top.log2() + shift as f64 + repr.exponent() as f64) / LOG2_10
    }

    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        self.abs().partial_cmp(&other.abs()).unwrap_or(Ordering::Equal)
    }

    fn binary(&self, other: &Self, op: impl FnOnce(Float, Float) -> Float) -> Self {
        let digits = self.digits.min(other.digits);
        let bits = digits.bits();
        let a = self.value.clone().with_precision(bits).value();
        let b = other.value.clone().with_precision(bits).value();
        Self::wrap(op(a, b), digits)
    }

    pub fn try_div(&self, other: &Self) -> NumResult<Self> {
        if other.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        Ok(self.binary(other, |a, b| a / b))
    }

    pub fn recip(&self) -> NumResult<Self> {
        Self::one(self.digits).try_div(self)
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        self * &Self::from_i64(k, self.digits)
    }

    pub fn div_i64(&self, k: i64) -> NumResult<Self> {
        self.try_div(&Self::from_i64(k, self.digits))
    }

    pub fn square(&self) -> Self {
        Self::wrap(self.value.sqr(), self.digits)
    }

    fn powi_unsigned(&self, mut n: u64) -> Self {
        let mut base = self.widened(GUARD_BITS);
        let mut acc = Float::ONE.with_precision(base.precision()).value();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = base.sqr();
            }
        }
        Self::wrap(acc, self.digits)
    }

    /// Integer power; negative exponents of zero are a division by zero.
    pub fn powi(&self, n: i64) -> NumResult<Self> {
        let mag = self.powi_unsigned(n.unsigned_abs());
        if n >= 0 {
            Ok(mag)
        } else {
            mag.recip()
        }
    }

    pub fn exp(&self) -> Self {
        Self::wrap(self.widened(GUARD_BITS).exp(), self.digits)
    }

    pub fn ln(&self) -> NumResult<Self> {
        if self.signum() <= 0 {
            return Err(NumError::Domain("ln of a non-positive number".into()));
        }
        Ok(Self::wrap(self.widened(GUARD_BITS).ln(), self.digits))
    }

    pub fn sqrt(&self) -> NumResult<Self> {
        match self.signum() {
            -1 => Err(NumError::Domain("sqrt of a negative number".into())),
            0 => Ok(self.clone()),
            _ => Ok(Self::wrap(self.widened(GUARD_BITS).sqrt(), self.digits)),
        }
    }

    /// Real `n`-th root. Odd roots of negative numbers are negative; even
    /// roots of negative numbers are a domain error.
    pub fn nth_root(&self, n: u32) -> NumResult<Self> {
        match n {
            0 => return Err(NumError::Domain("zeroth root".into())),
            1 => return Ok(self.clone()),
            2 => return self.sqrt(),
            _ => {}
        }
        match self.signum() {
            0 => return Ok(self.clone()),
            -1 if n % 2 == 0 => {
                return Err(NumError::Domain(format!("even root ({n}) of a negative number")))
            }
            -1 => return Ok(-&(-self).nth_root(n)?),
            _ => {}
        }
        let bits = self.digits.bits() + GUARD_BITS;
        let x = self.value.clone().with_precision(bits).value();
        // 64-bit starting guess from the logarithm; valid for any exponent range
        let ln_x = self.value.clone().with_precision(64).value().ln().to_f64().value();
        let guess = Float::try_from(ln_x / n as f64)
            .map_err(|_| NumError::Domain("root guess overflow".into()))?
            .with_precision(64)
            .value()
            .exp();
        let mut y = guess.with_precision(bits).value();
        let n_f = Float::from(n).with_precision(bits).value();
        let n_minus_1 = Float::from(n - 1).with_precision(bits).value();
        let tol_exp = -(bits as isize) + 4;
        for _ in 0..64 {
            let y_pow = y.powi(IBig::from(n - 1));
            let next = (&n_minus_1 * &y + &x / y_pow) / &n_f;
            let delta = (&next - &y).with_precision(64).value();
            y = next;
            if delta.repr().is_zero() {
                break;
            }
            let rel = (delta / y.clone().with_precision(64).value()).to_f64().value().abs();
            if rel == 0.0 || rel.log2() < tol_exp as f64 {
                break;
            }
        }
        Ok(Self::wrap(y, self.digits))
    }

    /// `x^(p/r)` with the real-root convention: negative bases need an odd
    /// (reduced) root denominator.
    pub fn pow_rational(&self, p: i64, r: u32) -> NumResult<Self> {
        if r == 0 {
            return Err(NumError::DivisionByZero);
        }
        let g = num_integer::gcd(p.unsigned_abs(), r as u64).max(1);
        let (p, r) = (p / g as i64, (r as u64 / g) as u32);
        if self.is_zero() {
            return if p > 0 {
                Ok(self.clone())
            } else {
                Err(NumError::DivisionByZero)
            };
        }
        let wide = self.with_precision(self.digits.plus(4));
        let root = wide.nth_root(r)?;
        Ok(root.powi(p)?.with_precision(self.digits))
    }

    /// Scientific notation with `sig` significant digits, e.g. `-3.66e-1`.
    pub fn to_sci_string(&self, sig: u32) -> String {
        let (neg, digits, exp10) = self.decimal_parts(sig);
        if digits == "0" {
            return "0".into();
        }
        let (head, tail) = digits.split_at(1);
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        s.push_str(head);
        if !tail.is_empty() {
            s.push('.');
            s.push_str(tail);
        }
        s.push_str(&format!("e{exp10}"));
        s
    }

    /// Positional notation with `sig` significant digits when the decimal
    /// exponent is moderate, scientific notation otherwise.
    pub fn to_decimal_string(&self, sig: u32) -> String {
        let (neg, digits, exp10) = self.decimal_parts(sig);
        if digits == "0" {
            let mut s = String::from("0.");
            s.push_str(&"0".repeat(sig.saturating_sub(1).max(1) as usize));
            return s;
        }
        if !(-6..=24).contains(&exp10) {
            return self.to_sci_string(sig);
        }
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        if exp10 < 0 {
            s.push_str("0.");
            s.push_str(&"0".repeat((-exp10 - 1) as usize));
            s.push_str(&digits);
        } else {
            let int_len = exp10 as usize + 1;
            if digits.len() <= int_len {
                s.push_str(&digits);
                s.push_str(&"0".repeat(int_len - digits.len()));
            } else {
                s.push_str(&digits[..int_len]);
                s.push('.');
                s.push_str(&digits[int_len..]);
            }
        }
        s
    }

    /// (negative, significant digit string of length `sig`, decimal exponent
    /// of the first digit).
    fn decimal_parts(&self, sig: u32) -> (bool, String, i64) {
        let sig = sig.max(1) as usize;
        if self.is_zero() {
            return (false, "0".into(), 0);
        }
        let dec = self.value.to_decimal().value().with_precision(sig).value();
        let repr = dec.repr();
        let s = repr.significand();
        let neg = s < &IBig::ZERO;
        let mut digits = if neg { (-s.clone()).to_string() } else { s.to_string() };
        let mut exp = repr.exponent() as i64 + digits.len() as i64 - 1;
        // trailing zeros may have been normalized away
        if digits.len() < sig {
            digits.push_str(&"0".repeat(sig - digits.len()));
        } else if digits.len() > sig {
            digits.truncate(sig);
        }
        if digits.starts_with('0') {
            exp -= 1;
        }
        (neg, digits, exp)
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sci_string(self.digits.get()))
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal({} @{}d)", self.to_sci_string(self.digits.get().min(30)), self.digits)
    }
}

impl PartialEq for BigReal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.value.cmp(&other.value))
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                self.binary(rhs, |a, b| a $op b)
            }
        }
        impl $trait<BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                (&self).$method(rhs)
            }
        }
        impl $trait<BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, +);
forward_binop!(Sub, sub, -);
forward_binop!(Mul, mul, *);

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal {
            value: -self.value.clone(),
            digits: self.digits,
        }
    }
}

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        -&self
    }
}

/// Elementary function selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Exp,
    Ln,
    Sqrt,
    NthRoot(u32),
    /// `x^(p/r)`
    PowRational(i64, u32),
}

pub fn elementary(kind: Elementary, x: &BigReal) -> NumResult<BigReal> {
    match kind {
        Elementary::Exp => Ok(x.exp()),
        Elementary::Ln => x.ln(),
        Elementary::Sqrt => x.sqrt(),
        Elementary::NthRoot(n) => x.nth_root(n),
        Elementary::PowRational(p, r) => x.pow_rational(p, r),
    }
}

/// Arithmetic-geometric mean of two positive numbers.
///
/// Iterates at 10 extra digits until `|a - b| <= 10^-(p+5) * a`.
pub fn agm(a: &BigReal, b: &BigReal) -> NumResult<BigReal> {
    if a.signum() <= 0 || b.signum() <= 0 {
        return Err(NumError::Domain("agm needs positive arguments".into()));
    }
    let digits = a.precision().min(b.precision());
    let inner = digits.plus(10);
    let mut x = a.with_precision(inner);
    let mut y = b.with_precision(inner);
    let tol = BigReal::pow10(-(digits.get() as i32) - 5, inner);
    for _ in 0..200 {
        if (&x - &y).abs() <= &tol * &x {
            return Ok(x.with_precision(digits));
        }
        let next_x = (&x + &y).div_i64(2)?;
        y = (&x * &y).sqrt()?;
        x = next_x;
    }
    Err(NumError::NoConvergence("agm iteration cap".into()))
}

/// π by the Gauss–Legendre (Brent–Salamin) iteration.
pub fn const_pi(digits: Digits) -> BigReal {
    let inner = digits.plus(10);
    let mut a = BigReal::one(inner);
    let mut b = BigReal::from_i64(2, inner).sqrt().and_then(|s| s.recip()).expect("sqrt 2");
    let mut t = BigReal::one(inner).div_i64(4).expect("nonzero");
    let mut p = BigReal::one(inner);
    let tol = BigReal::pow10(-(digits.get() as i32) - 5, inner);
    for _ in 0..64 {
        let next_a = (&a + &b).div_i64(2).expect("nonzero");
        let next_b = (&a * &b).sqrt().expect("positive");
        let gap = &a - &next_a;
        t = &t - &(&p * &gap.square());
        p = p.mul_i64(2);
        a = next_a;
        b = next_b;
        if (&a - &b).abs() <= tol {
            break;
        }
    }
    let pi = (&a + &b).square().try_div(&t.mul_i64(4)).expect("t is positive");
    pi.with_precision(digits)
}

/// Γ(1/4) = sqrt((2π)^(3/2) / agm(1, √2)).
pub fn gamma_one_quarter(digits: Digits) -> BigReal {
    let inner = digits.plus(10);
    let pi = const_pi(inner);
    let two_pi = pi.mul_i64(2);
    let numerator = &two_pi * &two_pi.sqrt().expect("positive");
    let m = agm(&BigReal::one(inner), &BigReal::from_i64(2, inner).sqrt().expect("positive"))
        .expect("positive arguments");
    numerator
        .try_div(&m)
        .and_then(|v| v.sqrt())
        .expect("positive")
        .with_precision(digits)
}

/// Γ(3/4) from Γ(1/4) and the reflection relation Γ(1/4)Γ(3/4) = π√2.
pub fn gamma_three_quarters(digits: Digits) -> BigReal {
    let inner = digits.plus(10);
    let pi = const_pi(inner);
    let sqrt2 = BigReal::from_i64(2, inner).sqrt().expect("positive");
    (&pi * &sqrt2)
        .try_div(&gamma_one_quarter(inner))
        .expect("nonzero")
        .with_precision(digits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: u32) -> Digits {
        Digits::new(n).unwrap()
    }

    fn close(a: &BigReal, b: &BigReal, log10_tol: f64) -> bool {
        let diff = (a - b).abs();
        diff.is_zero() || diff.log10_abs() <= log10_tol + b.abs().log10_abs().max(0.0)
    }

    #[test]
    fn precision_floor() {
        assert_eq!(Digits::new(9), Err(NumError::PrecisionUnderflow(9)));
        assert!(Digits::new(10).is_ok());
    }

    #[test]
    fn cube_root_of_minus_eight() {
        let x = BigReal::from_i64(-8, d(30));
        let r = x.nth_root(3).unwrap();
        assert!(close(&r, &BigReal::from_i64(-2, d(30)), -28.0), "{r}");
    }

    #[test]
    fn domain_errors() {
        let neg = BigReal::from_i64(-2, d(20));
        assert!(matches!(neg.ln(), Err(NumError::Domain(_))));
        assert!(matches!(neg.sqrt(), Err(NumError::Domain(_))));
        assert!(matches!(neg.nth_root(4), Err(NumError::Domain(_))));
        assert!(matches!(neg.pow_rational(1, 2), Err(NumError::Domain(_))));
        assert!(neg.pow_rational(2, 3).is_ok());
        assert_eq!(BigReal::zero(d(20)).recip(), Err(NumError::DivisionByZero));
    }

    #[test]
    fn exp_zero_is_one() {
        assert_eq!(BigReal::zero(d(40)).exp(), BigReal::one(d(40)));
    }

    #[test]
    fn precision_is_min_of_operands() {
        let a = BigReal::from_i64(3, d(50));
        let b = BigReal::from_i64(7, d(20));
        assert_eq!((&a * &b).precision(), d(20));
        assert_eq!((&a + &b).precision(), d(20));
        assert_eq!(a.try_div(&b).unwrap().precision(), d(20));
    }

    #[test]
    fn fifth_root_quarter_power() {
        // 5^(1/4) squared twice gives 5 back
        let x = BigReal::from_i64(5, d(60));
        let r = x.pow_rational(1, 4).unwrap();
        assert!(close(&r.powi(4).unwrap(), &x, -58.0));
        assert_eq!(&r.to_sci_string(12), "1.49534878122e0");
    }

    #[test]
    fn agm_fixed_point_and_known_value() {
        let one = BigReal::one(d(30));
        assert!(close(&agm(&one, &one).unwrap(), &one, -29.0));
        // iterate the recurrence by hand in f64 as an oracle
        let (mut a, mut b) = (2f64.sqrt(), 1f64);
        for _ in 0..10 {
            let na = (a + b) / 2.0;
            b = (a * b).sqrt();
            a = na;
        }
        let m = agm(&BigReal::from_i64(2, d(30)).sqrt().unwrap(), &one).unwrap();
        assert!((m.to_f64() - a).abs() < 1e-15);
        assert_eq!(&m.to_sci_string(6), "1.19814e0");
        assert!(agm(&one, &BigReal::zero(d(30))).is_err());
    }

    #[test]
    fn pi_fifteen_digits() {
        let pi = const_pi(d(15));
        assert_eq!(pi.to_decimal_string(15), "3.14159265358979");
    }

    #[test]
    fn gamma_three_quarters_ten_digits() {
        let g = gamma_three_quarters(d(12));
        assert_eq!(g.to_decimal_string(10), "1.225416702");
    }

    #[test]
    fn decimal_formatting() {
        let x = BigReal::from_ratio(&BigRational::new((-3).into(), 8.into()), d(20));
        assert_eq!(x.to_decimal_string(4), "-0.3750");
        assert_eq!(x.to_sci_string(3), "-3.75e-1");
        assert_eq!(BigReal::from_i64(1200, d(20)).to_decimal_string(6), "1200.00");
        assert_eq!(BigReal::pow10(-40, d(20)).to_sci_string(2), "1.0e-40");
        assert!((BigReal::pow10(-400, d(20)).log10_abs() + 400.0).abs() < 1e-9);
    }

    #[test]
    fn guard_policy() {
        std::env::remove_var(GUARD_ENV);
        assert_eq!(guard_digits(1), 10);
        assert_eq!(guard_digits(50), 12);
        assert_eq!(working_digits(d(40), 100).get(), 52);
    }
}
