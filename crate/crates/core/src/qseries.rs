//! Exact truncated Laurent series in `x = q^(1/D)` with rational coefficients.
//!
//! A [`QSeries`] knows every coefficient from its lowest stored exponent up
//! to `top` (inclusive, in `x`-units); everything above `top` is unknown.
//! Operations track exactly how far their result is known, so a check that
//! "all coefficients through `q^N` vanish" never reads an unknown coefficient.

use std::cmp::{max, min};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

/// Largest exponent lattice `D` any operation may produce.
pub const DEFAULT_LATTICE_BOUND: u32 = 24;

/// Lowest allowed exponent, in multiples of `-D`.
pub const LAURENT_DEPTH: i64 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("lattice q^(1/{needed}) exceeds the bound q^(1/{bound})")]
    LatticeOverflow { needed: u64, bound: u32 },
    #[error("series is not invertible (zero through its known order)")]
    NotInvertible,
    #[error("root not extractable: {0}")]
    RootNotExtractable(String),
    #[error("sign substitution q -> -q^m hit a fractional exponent")]
    FractionalSignExponent,
    #[error("lowest exponent x^{low} is below -{depth}*{lattice}", depth = LAURENT_DEPTH)]
    LaurentOverflow { low: i64, lattice: u32 },
}

pub type SeriesResult<T> = Result<T, SeriesError>;

#[derive(Clone, PartialEq, Eq)]
pub struct QSeries {
    lattice: u32,
    low: i64,
    top: i64,
    coeffs: Vec<Rational>,
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

fn lcm_checked(a: u32, b: u32) -> SeriesResult<u32> {
    let l = (a as u64).lcm(&(b as u64));
    if l > DEFAULT_LATTICE_BOUND as u64 {
        Err(SeriesError::LatticeOverflow {
            needed: l,
            bound: DEFAULT_LATTICE_BOUND,
        })
    } else {
        Ok(l as u32)
    }
}

fn all_integral(c: &[Rational]) -> bool {
    c.iter().all(|r| r.is_integer())
}

impl QSeries {
    /// Series with coefficients for `x^low ..= x^top`. Missing trailing
    /// coefficients are zero; extra ones are dropped.
    pub fn with_top(lattice: u32, low: i64, top: i64, mut coeffs: Vec<Rational>) -> Self {
        assert!(lattice >= 1, "lattice must be positive");
        let len = max(top - low + 1, 0) as usize;
        coeffs.resize(len, Rational::zero());
        let mut s = QSeries {
            lattice,
            low,
            top,
            coeffs,
        };
        s.normalize();
        s
    }

    /// Series whose known range ends at its last given coefficient.
    pub fn new(lattice: u32, low: i64, coeffs: Vec<Rational>) -> Self {
        let top = low + coeffs.len() as i64 - 1;
        Self::with_top(lattice, low, top, coeffs)
    }

    /// Integer coefficients of `1, q, q^2, ...` known through `q^order`.
    pub fn from_ints(coeffs: &[i64], order: i64) -> Self {
        Self::with_top(1, 0, order, coeffs.iter().map(|&c| rat(c)).collect())
    }

    pub fn zero(lattice: u32, top: i64) -> Self {
        Self::with_top(lattice, top + 1, top, Vec::new())
    }

    pub fn constant(c: Rational, lattice: u32, top: i64) -> Self {
        Self::with_top(lattice, 0, top, vec![c])
    }

    pub fn one(lattice: u32, top: i64) -> Self {
        Self::constant(Rational::one(), lattice, top)
    }

    /// `coeff * x^exp`, known through `x^top`.
    pub fn monomial(lattice: u32, exp: i64, coeff: Rational, top: i64) -> Self {
        Self::with_top(lattice, exp, top, vec![coeff])
    }

    pub fn lattice(&self) -> u32 {
        self.lattice
    }

    /// Lowest stored exponent; equal to the valuation unless the series is
    /// zero through `top`, in which case it is `top + 1`.
    pub fn low(&self) -> i64 {
        self.low
    }

    /// Highest known exponent in `x`-units.
    pub fn top(&self) -> i64 {
        self.top
    }

    /// Highest known exponent in `q`-units.
    pub fn order(&self) -> Ratio<i64> {
        Ratio::new(self.top, self.lattice as i64)
    }

    /// Coefficient of `x^exp`; `None` past the known range.
    pub fn coeff(&self, exp: i64) -> Option<Rational> {
        if exp > self.top {
            None
        } else if exp < self.low {
            Some(Rational::zero())
        } else {
            Some(self.coeffs[(exp - self.low) as usize].clone())
        }
    }

    /// Coefficient of `q^e` for rational `e`.
    pub fn coeff_q(&self, e: Ratio<i64>) -> Option<Rational> {
        let scaled = e * self.lattice as i64;
        if !scaled.is_integer() {
            return if e * self.lattice as i64 > Ratio::from_integer(self.top) {
                None
            } else {
                Some(Rational::zero())
            };
        }
        self.coeff(scaled.to_integer())
    }

    /// Known coefficients as `(exponent, value)` pairs, zeros included.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &Rational)> {
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (self.low + i as i64, c))
    }

    fn nonzero_terms(&self) -> Vec<(i64, &Rational)> {
        self.terms().filter(|(_, c)| !c.is_zero()).collect()
    }

    pub fn valuation(&self) -> Option<i64> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.low)
        }
    }

    /// True when every known coefficient is zero.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn first_nonzero(&self) -> Option<(i64, &Rational)> {
        self.coeffs.first().map(|c| (self.low, c))
    }

    pub fn is_integral(&self) -> bool {
        all_integral(&self.coeffs)
    }

    fn normalize(&mut self) {
        let lead = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.low += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.low = self.top + 1;
        }
    }

    fn checked(self) -> SeriesResult<Self> {
        if !self.coeffs.is_empty() && self.low < -LAURENT_DEPTH * self.lattice as i64 {
            Err(SeriesError::LaurentOverflow {
                low: self.low,
                lattice: self.lattice,
            })
        } else {
            Ok(self)
        }
    }

    /// Drop everything above `x^top`.
    pub fn truncate(&self, top: i64) -> Self {
        if top >= self.top {
            return self.clone();
        }
        let keep = max(top - self.low + 1, 0) as usize;
        Self::with_top(self.lattice, self.low, top, self.coeffs[..keep.min(self.coeffs.len())].to_vec())
    }

    /// Re-express on lattice `lattice`, which must be a multiple of the
    /// current one. Lossless: `to_lattice(k*D)` then `reduce_to(D)` is the
    /// identity.
    pub fn to_lattice(&self, lattice: u32) -> SeriesResult<Self> {
        assert!(lattice % self.lattice == 0, "target lattice must be a multiple");
        if lattice > DEFAULT_LATTICE_BOUND {
            return Err(SeriesError::LatticeOverflow {
                needed: lattice as u64,
                bound: DEFAULT_LATTICE_BOUND,
            });
        }
        let k = (lattice / self.lattice) as i64;
        if k == 1 {
            return Ok(self.clone());
        }
        let top = (self.top + 1) * k - 1;
        let low = self.low * k;
        let mut coeffs = vec![Rational::zero(); max(top - low + 1, 0) as usize];
        for (e, c) in self.terms() {
            coeffs[(e * k - low) as usize] = c.clone();
        }
        Ok(Self::with_top(lattice, low, top, coeffs))
    }

    /// Smallest lattice dividing the current one that still holds every
    /// nonzero exponent.
    pub fn reduce_lattice(&self) -> Self {
        let d = self.lattice as i64;
        let mut g = d;
        for (e, _) in self.nonzero_terms() {
            g = g.gcd(&e);
            if g == 1 {
                return self.clone();
            }
        }
        self.reduce_to((d / g) as u32)
    }

    /// Re-express on a coarser lattice. Panics if some nonzero exponent does
    /// not land on it.
    pub fn reduce_to(&self, lattice: u32) -> Self {
        assert!(self.lattice % lattice == 0, "target lattice must divide the current one");
        let k = (self.lattice / lattice) as i64;
        if k == 1 {
            return self.clone();
        }
        let top = Integer::div_floor(&self.top, &k);
        let low = Integer::div_ceil(&self.low, &k);
        let mut coeffs = vec![Rational::zero(); max(top - low + 1, 0) as usize];
        for (e, c) in self.nonzero_terms() {
            assert!(e % k == 0, "exponent x^{e} is not on lattice {lattice}");
            if e / k <= top {
                coeffs[(e / k - low) as usize] = c.clone();
            }
        }
        Self::with_top(lattice, low, top, coeffs)
    }

    fn unify(&self, other: &Self) -> SeriesResult<(Self, Self)> {
        if self.lattice == other.lattice {
            return Ok((self.clone(), other.clone()));
        }
        let l = lcm_checked(self.lattice, other.lattice)?;
        Ok((self.to_lattice(l)?, other.to_lattice(l)?))
    }

    pub fn add(&self, other: &Self) -> SeriesResult<Self> {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &Self) -> SeriesResult<Self> {
        self.combine(other, true)
    }

    fn combine(&self, other: &Self, negate: bool) -> SeriesResult<Self> {
        let (a, b) = self.unify(other)?;
        let top = min(a.top, b.top);
        let low = min(a.low, b.low);
        let mut coeffs = vec![Rational::zero(); max(top - low + 1, 0) as usize];
        for (e, c) in a.terms().take_while(|(e, _)| *e <= top) {
            coeffs[(e - low) as usize] += c;
        }
        for (e, c) in b.terms().take_while(|(e, _)| *e <= top) {
            if negate {
                coeffs[(e - low) as usize] -= c;
            } else {
                coeffs[(e - low) as usize] += c;
            }
        }
        Self::with_top(a.lattice, low, top, coeffs).checked()
    }

    pub fn neg(&self) -> Self {
        QSeries {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            ..self.clone()
        }
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self::zero(self.lattice, self.top);
        }
        QSeries {
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
            ..self.clone()
        }
    }

    /// Multiply by `x^shift` exactly.
    pub fn shift(&self, shift: i64) -> SeriesResult<Self> {
        QSeries {
            low: self.low + shift,
            top: self.top + shift,
            ..self.clone()
        }
        .checked()
    }

    /// Exact product, known through
    /// `min(top_a + val_b, top_b + val_a)`.
    pub fn mul(&self, other: &Self) -> SeriesResult<Self> {
        let (a, b) = self.unify(other)?;
        // a zero-through-top series behaves as if its valuation were top+1
        let va = a.low;
        let vb = b.low;
        let top = min(a.top + vb, b.top + va);
        let low = va + vb;
        if a.is_zero() || b.is_zero() || top < low {
            return Ok(Self::zero(a.lattice, top));
        }
        let len = (top - low + 1) as usize;
        let na = a.nonzero_terms();
        let nb = b.nonzero_terms();
        let coeffs = if a.is_integral() && b.is_integral() {
            let mut acc = vec![BigInt::zero(); len];
            for &(i, ca) in &na {
                let ca = ca.numer();
                for &(j, cb) in &nb {
                    if i + j > top {
                        break;
                    }
                    acc[(i + j - low) as usize] += ca * cb.numer();
                }
            }
            acc.into_iter().map(Rational::from_integer).collect()
        } else {
            let mut acc = vec![Rational::zero(); len];
            for &(i, ca) in &na {
                for &(j, cb) in &nb {
                    if i + j > top {
                        break;
                    }
                    acc[(i + j - low) as usize] += ca * cb;
                }
            }
            acc
        };
        Self::with_top(a.lattice, low, top, coeffs).checked()
    }

    /// Multiplicative inverse. A series `c x^v (1 + ...)` known through
    /// `x^top` has an inverse known through `x^(top - 2v)`.
    pub fn inverse(&self) -> SeriesResult<Self> {
        if self.is_zero() {
            return Err(SeriesError::NotInvertible);
        }
        let v = self.low;
        let n = self.coeffs.len();
        let c0 = &self.coeffs[0];
        let nz: Vec<(usize, &Rational)> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| !c.is_zero())
            .collect();
        let coeffs: Vec<Rational> = if self.is_integral() && c0.abs().is_one() {
            let unit = c0.numer().clone();
            let mut b: Vec<BigInt> = Vec::with_capacity(n);
            b.push(unit.clone());
            for m in 1..n {
                let mut s = BigInt::zero();
                for &(k, ck) in &nz {
                    if k > m {
                        break;
                    }
                    s += ck.numer() * &b[m - k];
                }
                // dividing by a unit is multiplying by it
                b.push(-(s * &unit));
            }
            b.into_iter().map(Rational::from_integer).collect()
        } else {
            let inv0 = c0.recip();
            let mut b: Vec<Rational> = Vec::with_capacity(n);
            b.push(inv0.clone());
            for m in 1..n {
                let mut s = Rational::zero();
                for &(k, ck) in &nz {
                    if k > m {
                        break;
                    }
                    s += ck * &b[m - k];
                }
                b.push(-(s * &inv0));
            }
            b
        };
        Self::with_top(self.lattice, -v, self.top - 2 * v, coeffs).checked()
    }

    pub fn div(&self, other: &Self) -> SeriesResult<Self> {
        self.mul(&other.inverse()?)
    }

    pub fn pow_int(&self, n: i64) -> SeriesResult<Self> {
        if n < 0 {
            return self.inverse()?.pow_int(-n);
        }
        if n == 0 {
            let rel = self.top - self.low;
            return Ok(Self::one(self.lattice, max(rel, 0)));
        }
        let mut base = self.clone();
        let mut acc: Option<QSeries> = None;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base)?,
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc.expect("n > 0"))
    }

    /// `a^alpha` for a unit series `1 + a_1 x + ...` by Miller's recurrence
    /// `m b_m = sum_{k=1..m} ((alpha+1)k - m) a_k b_{m-k}`.
    fn unit_power(&self, alpha: &Rational) -> Self {
        debug_assert!(self.low == 0 && self.coeffs[0].is_one());
        let n = self.coeffs.len();
        let nz: Vec<(usize, &Rational)> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| !c.is_zero())
            .collect();
        let alpha1 = alpha + Rational::one();
        let mut b: Vec<Rational> = Vec::with_capacity(n);
        b.push(Rational::one());
        for m in 1..n {
            let mut s = Rational::zero();
            for &(k, ak) in &nz {
                if k > m {
                    break;
                }
                let w = &alpha1 * rat(k as i64) - rat(m as i64);
                if !w.is_zero() {
                    s += w * ak * &b[m - k];
                }
            }
            b.push(s / rat(m as i64));
        }
        Self::with_top(self.lattice, 0, self.top, b)
    }

    /// `n`-th root of a series with lowest exponent 0 and constant term 1.
    pub fn nth_root_series(&self, n: u32) -> SeriesResult<Self> {
        if n == 0 {
            return Err(SeriesError::RootNotExtractable("zeroth root".into()));
        }
        match self.first_nonzero() {
            Some((0, c)) if c.is_one() => {}
            _ => {
                return Err(SeriesError::RootNotExtractable(
                    "series must start 1 + O(x)".into(),
                ))
            }
        }
        Ok(self.unit_power(&Rational::new(BigInt::one(), BigInt::from(n))))
    }

    /// `a^(p/r)` for a general series `c x^v u` with `u = 1 + O(x)`: the
    /// leading coefficient needs an exact rational `r`-th root and the
    /// lattice grows if `v p / r` is fractional.
    pub fn pow_rational(&self, p: i64, r: u32) -> SeriesResult<Self> {
        let exp = Ratio::new(p, r as i64);
        if exp.is_integer() {
            return self.pow_int(exp.to_integer());
        }
        let (p, r) = (*exp.numer(), *exp.denom() as u32);
        let (v, c) = match self.first_nonzero() {
            Some((v, c)) => (v, c.clone()),
            None => return Err(SeriesError::RootNotExtractable("zero series".into())),
        };
        let c_root = exact_root(&c, r).ok_or_else(|| {
            SeriesError::RootNotExtractable(format!("{c} has no rational {r}-th root"))
        })?;
        let c_pow = pow_rational_int(&c_root, p);
        let unit = self.shift(-v)?.scale(&c.recip());
        let unit_pow = unit.unit_power(&Rational::new(BigInt::from(p), BigInt::from(r)));
        // exponent of the monomial factor: v*p/r in x-units
        let vp = v * p;
        let g = vp.gcd(&(r as i64));
        let g = if vp == 0 { r as i64 } else { g };
        let k = r as i64 / g;
        let lattice = self.lattice as u64 * k as u64;
        if lattice > DEFAULT_LATTICE_BOUND as u64 {
            return Err(SeriesError::LatticeOverflow {
                needed: lattice,
                bound: DEFAULT_LATTICE_BOUND,
            });
        }
        let unit_pow = unit_pow.to_lattice(lattice as u32)?;
        unit_pow.shift(vp / g)?.scale(&c_pow).checked()
    }

    /// Apply `q -> sign * q^m` with `m > 0` rational. A negative sign needs
    /// every nonzero exponent to be an integer power of `q`.
    pub fn substitute_monomial(&self, sign: i8, m: Ratio<i64>) -> SeriesResult<Self> {
        assert!(sign == 1 || sign == -1, "sign must be +1 or -1");
        assert!(m > Ratio::zero(), "substitution exponent must be positive");
        let d = self.lattice as i64;
        let (mn, md) = (*m.numer(), *m.denom());
        let lattice = d * md;
        let low = self.low * mn;
        let top = mn * (self.top + 1) - 1;
        let mut coeffs = vec![Rational::zero(); max(top - low + 1, 0) as usize];
        for (e, c) in self.nonzero_terms() {
            let mut c = c.clone();
            if sign < 0 {
                if e % d != 0 {
                    return Err(SeriesError::FractionalSignExponent);
                }
                if (e / d).is_odd() {
                    c = -c;
                }
            }
            let ne = e * mn;
            if ne <= top {
                coeffs[(ne - low) as usize] = c;
            }
        }
        // build on the wide lattice without the bound check, then shrink
        let wide = QSeries::with_top(lattice as u32, low, top, coeffs).reduce_lattice();
        if wide.lattice > DEFAULT_LATTICE_BOUND {
            return Err(SeriesError::LatticeOverflow {
                needed: wide.lattice as u64,
                bound: DEFAULT_LATTICE_BOUND,
            });
        }
        wide.checked()
    }

    /// Term-wise `d/dq`: `x^e` (that is `q^(e/D)`) maps to `(e/D) x^(e-D)`.
    pub fn derivative(&self) -> Self {
        let d = self.lattice as i64;
        let low = self.low - d;
        let coeffs = self
            .terms()
            .map(|(e, c)| c * Rational::new(BigInt::from(e), BigInt::from(d)))
            .collect();
        Self::with_top(self.lattice, low, self.top - d, coeffs)
    }

    /// Coefficient-wise comparison over the range both series know.
    pub fn agrees_with(&self, other: &Self) -> SeriesResult<bool> {
        let diff = self.sub(other)?;
        Ok(diff.is_zero())
    }
}

fn pow_rational_int(c: &Rational, p: i64) -> Rational {
    if p >= 0 {
        num_traits::pow(c.clone(), p as usize)
    } else {
        num_traits::pow(c.recip(), (-p) as usize)
    }
}

/// Exact rational `r`-th root, real convention for negatives with odd `r`.
fn exact_root(c: &Rational, r: u32) -> Option<Rational> {
    if c.is_negative() {
        if r % 2 == 0 {
            return None;
        }
        return exact_root(&-c, r).map(|x| -x);
    }
    let n = c.numer().nth_root(r);
    let d = c.denom().nth_root(r);
    if num_traits::pow(n.clone(), r as usize) == *c.numer()
        && num_traits::pow(d.clone(), r as usize) == *c.denom()
    {
        Some(Rational::new(n, d))
    } else {
        None
    }
}

impl fmt::Debug for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QSeries[D={}] ", self.lattice)?;
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.nonzero_terms() {
            let q = Ratio::new(e, self.lattice as i64);
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = c.abs();
            let show_coeff = !mag.is_one() || q.is_zero();
            if show_coeff {
                write!(f, "{mag}")?;
            }
            if !q.is_zero() {
                if show_coeff {
                    f.write_str("*")?;
                }
                if q.is_one() {
                    f.write_str("q")?;
                } else if q.is_integer() {
                    write!(f, "q^{q}")?;
                } else {
                    write!(f, "q^({q})")?;
                }
            }
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " + O(q^({}))", Ratio::new(self.top + 1, self.lattice as i64))
    }
}

/// `(sign * q^r; q^s)_inf ^ power`, every factor with exponent up to
/// `q^order` included.
pub fn infinite_product(sign: i8, r: Ratio<i64>, s: Ratio<i64>, power: i64, order: i64) -> QSeries {
    assert!(r > Ratio::zero() && s > Ratio::zero(), "product exponents must be positive");
    let lattice = r.denom().lcm(s.denom());
    let top = order * lattice;
    let mut acc: Vec<BigInt> = vec![BigInt::zero(); max(top + 1, 0) as usize];
    if top >= 0 {
        acc[0] = BigInt::one();
    }
    // factor (1 - a x^e) with a = sign
    let a = BigInt::from(sign);
    let mut n = 0i64;
    loop {
        let e_q = r + s * n;
        let e = (e_q * lattice).to_integer();
        if e > top || power == 0 {
            break;
        }
        let e = e as usize;
        if power > 0 {
            for _ in 0..power {
                for i in (e..acc.len()).rev() {
                    let t = &acc[i - e] * &a;
                    acc[i] -= t;
                }
            }
        } else {
            for _ in 0..(-power) {
                for i in e..acc.len() {
                    let t = &acc[i - e] * &a;
                    acc[i] += t;
                }
            }
        }
        n += 1;
    }
    QSeries::with_top(
        lattice as u32,
        0,
        top,
        acc.into_iter().map(Rational::from_integer).collect(),
    )
}

/// The four theta-type building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThetaKind {
    /// `phi(q) = sum q^(n^2)`
    Phi,
    /// `psi(q) = sum_{n>=0} q^(n(n+1)/2)`
    Psi,
    /// `f(-q) = (q;q)_inf = sum (-1)^n q^(n(3n-1)/2)`
    FMinus,
    /// `chi(-q) = (q;q^2)_inf`
    ChiMinus,
}

impl ThetaKind {
    pub const ALL: [ThetaKind; 4] = [ThetaKind::Phi, ThetaKind::Psi, ThetaKind::FMinus, ThetaKind::ChiMinus];
}

fn pentagonal_sum(order: i64) -> QSeries {
    let mut c = vec![0i64; max(order + 1, 0) as usize];
    if order >= 0 {
        c[0] = 1;
    }
    let mut n = 1i64;
    loop {
        let e1 = n * (3 * n - 1) / 2;
        if e1 > order {
            break;
        }
        let sg = if n % 2 == 0 { 1 } else { -1 };
        c[e1 as usize] += sg;
        let e2 = n * (3 * n + 1) / 2;
        if e2 <= order {
            c[e2 as usize] += sg;
        }
        n += 1;
    }
    QSeries::from_ints(&c, order)
}

/// Sum form of a theta-type series through `q^order`. For `ChiMinus`, the
/// "sum form" is the pentagonal quotient `f(-q)/f(-q^2)`.
pub fn theta_series(kind: ThetaKind, order: i64) -> QSeries {
    let s = match kind {
        ThetaKind::Phi => {
            let mut c = vec![0i64; (order + 1) as usize];
            c[0] = 1;
            let mut n = 1i64;
            while n * n <= order {
                c[(n * n) as usize] += 2;
                n += 1;
            }
            QSeries::from_ints(&c, order)
        }
        ThetaKind::Psi => {
            let mut c = vec![0i64; (order + 1) as usize];
            let mut n = 0i64;
            while n * (n + 1) / 2 <= order {
                c[(n * (n + 1) / 2) as usize] += 1;
                n += 1;
            }
            QSeries::from_ints(&c, order)
        }
        ThetaKind::FMinus => pentagonal_sum(order),
        ThetaKind::ChiMinus => {
            let f1 = pentagonal_sum(order);
            let f2 = pentagonal_sum(order / 2 + 1)
                .substitute_monomial(1, Ratio::from_integer(2))
                .expect("integer substitution");
            f1.div(&f2).expect("unit series").truncate(order)
        }
    };
    debug_assert!(
        s.agrees_with(&theta_product(kind, order)).unwrap_or(false),
        "sum and product forms of {kind:?} disagree"
    );
    s
}

/// Product form of a theta-type series through `q^order`.
pub fn theta_product(kind: ThetaKind, order: i64) -> QSeries {
    let one = Ratio::from_integer(1);
    let two = Ratio::from_integer(2);
    let prod = |sign, r, s, power| infinite_product(sign, r, s, power, order);
    let m = |a: QSeries, b: QSeries| a.mul(&b).expect("same lattice");
    match kind {
        // (-q;q^2)^2 (q^2;q^2)
        ThetaKind::Phi => m(prod(-1, one, two, 2), prod(1, two, two, 1)),
        ThetaKind::Psi => m(prod(1, two, two, 1), prod(1, one, two, -1)),
        ThetaKind::FMinus => prod(1, one, one, 1),
        ThetaKind::ChiMinus => prod(1, one, two, 1),
    }
}

/// `U(q)` with `V(q) = q^(1/3) U(q)`, through `q^order`, from the cubic
/// continued fraction evaluated bottom-up to `depth` levels.
pub fn cf_unit_series_depth(order: i64, depth: i64) -> QSeries {
    // t_k = 1 + (q^k + q^2k)/t_{k+1}, needed only through q^(order-k+1)
    let mut t = QSeries::one(1, 0);
    for k in (1..=depth).rev() {
        let need = max(order - k + 1, 0);
        let mut num = vec![Rational::zero(); (need + 1) as usize];
        if k <= need {
            num[k as usize] += Rational::one();
        }
        if 2 * k <= need {
            num[(2 * k) as usize] += Rational::one();
        }
        let num = QSeries::with_top(1, 0, need, num);
        let tail = t.inverse().expect("t_k starts with 1");
        t = QSeries::one(1, need)
            .add(&num.mul(&tail).expect("lattice 1"))
            .expect("lattice 1")
            .truncate(need);
        if t.top() < need {
            // only possible when the starting tail is too short; pad with
            // the tail's own value 1 + O(q) would be wrong, so extend depth
            unreachable!("tail known through q^{} < q^{need}", t.top());
        }
    }
    t.inverse().expect("t_1 starts with 1").truncate(order)
}

pub fn cf_unit_series(order: i64) -> QSeries {
    cf_unit_series_depth(order, order + 2)
}

/// Series of the cubic continued fraction `V(q)` on lattice 3.
pub fn cf_series(order: i64) -> QSeries {
    let u = cf_unit_series(order);
    u.to_lattice(3)
        .expect("lattice 3")
        .shift(1)
        .expect("positive shift")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64) -> Ratio<i64> {
        Ratio::from_integer(n)
    }

    fn ints(s: &QSeries) -> Vec<i64> {
        assert_eq!(s.lattice(), 1);
        (0..=s.top())
            .map(|e| {
                let c = s.coeff(e).unwrap();
                assert!(c.is_integer());
                i64::try_from(c.to_integer()).unwrap()
            })
            .collect()
    }

    #[test]
    fn difference_of_squares() {
        let a = QSeries::from_ints(&[1, 1], 10);
        let b = QSeries::from_ints(&[1, -1], 10);
        let p = a.mul(&b).unwrap();
        assert_eq!(ints(&p), vec![1, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn additive_inverse_is_zero() {
        let a = theta_series(ThetaKind::Psi, 20);
        let z = a.add(&a.neg()).unwrap();
        assert!(z.is_zero());
        assert_eq!(z.top(), 20);
    }

    #[test]
    fn product_matches_naive_convolution() {
        let n = 50;
        let a = theta_series(ThetaKind::Psi, n);
        let b = theta_series(ThetaKind::Phi, n);
        let (ia, ib) = (ints(&a), ints(&b));
        let mut naive = vec![0i64; (n + 1) as usize];
        for i in 0..=n as usize {
            for j in 0..=(n as usize - i) {
                naive[i + j] += ia[i] * ib[j];
            }
        }
        assert_eq!(ints(&a.mul(&b).unwrap()), naive);
    }

    #[test]
    fn geometric_inverse() {
        let a = QSeries::from_ints(&[1, -1], 12);
        assert_eq!(ints(&a.inverse().unwrap()), vec![1; 13]);
        assert_eq!(QSeries::zero(1, 5).inverse(), Err(SeriesError::NotInvertible));
    }

    #[test]
    fn laurent_inverse_precision() {
        // q + q^2 known through q^10 → inverse known through q^8
        let a = QSeries::from_ints(&[0, 1, 1], 10);
        let inv = a.inverse().unwrap();
        assert_eq!(inv.low(), -1);
        assert_eq!(inv.top(), 8);
        let back = inv.mul(&a).unwrap();
        assert!(back.sub(&QSeries::one(1, 100)).unwrap().is_zero());
    }

    #[test]
    fn psi_inverse_to_order_100() {
        let p = theta_series(ThetaKind::Psi, 100);
        let prod = p.inverse().unwrap().mul(&p).unwrap();
        assert_eq!(prod.top(), 100);
        assert!(prod.sub(&QSeries::one(1, 100)).unwrap().is_zero());
    }

    #[test]
    fn roots() {
        let one = QSeries::one(1, 10);
        assert!(one.nth_root_series(3).unwrap().agrees_with(&one).unwrap());
        let a = QSeries::from_ints(&[1, 1], 20);
        let cube = a.pow_int(3).unwrap();
        assert!(cube.nth_root_series(3).unwrap().agrees_with(&a).unwrap());
        assert!(matches!(
            QSeries::from_ints(&[2, 1], 5).nth_root_series(2),
            Err(SeriesError::RootNotExtractable(_))
        ));
        assert!(matches!(
            QSeries::from_ints(&[0, 1], 5).nth_root_series(2),
            Err(SeriesError::RootNotExtractable(_))
        ));
    }

    #[test]
    fn rational_power_with_monomial() {
        // (4 q^2 (1+q))^(1/2) = 2 q (1+q)^(1/2)
        let a = QSeries::from_ints(&[0, 0, 4, 4], 30);
        let r = a.pow_rational(1, 2).unwrap();
        assert_eq!(r.low(), 1);
        assert!(r.pow_int(2).unwrap().agrees_with(&a).unwrap());
        // q^(1/2) needs lattice 2
        let s = QSeries::from_ints(&[0, 1], 30);
        let h = s.pow_rational(1, 2).unwrap();
        assert_eq!(h.lattice(), 2);
        assert_eq!(h.low(), 1);
        assert!(QSeries::from_ints(&[2], 5).pow_rational(1, 2).is_err());
    }

    #[test]
    fn substitution_sign_flip() {
        let a = QSeries::from_ints(&[1, 1, 0, 1], 10);
        let b = a.substitute_monomial(-1, q(1)).unwrap();
        assert_eq!(ints(&b), vec![1, -1, 0, -1, 0, 0, 0, 0, 0, 0, 0]);
        let back = b.substitute_monomial(-1, q(1)).unwrap();
        assert_eq!(back, a);
        let frac = QSeries::monomial(3, 1, Rational::one(), 9);
        assert_eq!(frac.substitute_monomial(-1, q(1)), Err(SeriesError::FractionalSignExponent));
    }

    #[test]
    fn substitution_precision() {
        // psi(q^3) from psi through q^10 is known through q^32
        let p = theta_series(ThetaKind::Psi, 10);
        let p3 = p.substitute_monomial(1, q(3)).unwrap();
        assert_eq!(p3.top(), 32);
        assert_eq!(p3.coeff(3), Some(Rational::one()));
        assert_eq!(p3.coeff(30), Some(Rational::one()));
        let r = p.substitute_monomial(1, Ratio::new(1, 3)).unwrap();
        assert_eq!(r.lattice(), 3);
    }

    #[test]
    fn phi_minus_q_matches_product() {
        // phi(-q) = (q;q)_inf / (-q;q)_inf
        let n = 60;
        let lhs = theta_series(ThetaKind::Phi, n).substitute_monomial(-1, q(1)).unwrap();
        let rhs = infinite_product(1, q(1), q(1), 1, n)
            .mul(&infinite_product(-1, q(1), q(1), -1, n))
            .unwrap();
        assert!(lhs.agrees_with(&rhs).unwrap());
        assert_eq!(lhs.top(), n);
    }

    #[test]
    fn derivative_rules() {
        assert!(QSeries::one(1, 10).derivative().is_zero());
        let x = QSeries::monomial(3, 1, Rational::one(), 30);
        let dx = x.derivative();
        assert_eq!(dx.low(), -2);
        assert_eq!(dx.coeff(-2), Some(Rational::new(1.into(), 3.into())));
    }

    #[test]
    fn pentagonal_numbers() {
        let f = infinite_product(1, q(1), q(1), 1, 15);
        assert_eq!(ints(&f), vec![1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1, 0, 0, -1]);
        assert_eq!(infinite_product(1, q(1), q(1), 0, 15), QSeries::one(1, 15));
    }

    #[test]
    fn chi_minus_direct_expansion() {
        // (q;q^2)_inf by factor-by-factor multiplication of (1 - q^(2n+1))
        let n = 20usize;
        let mut c = vec![0i64; n + 1];
        c[0] = 1;
        let mut e = 1;
        while e <= n {
            for i in (e..=n).rev() {
                c[i] -= c[i - e];
            }
            e += 2;
        }
        assert_eq!(ints(&infinite_product(1, q(1), q(2), 1, n as i64)), c);
        assert_eq!(ints(&theta_series(ThetaKind::ChiMinus, n as i64)), c);
    }

    #[test]
    fn theta_leading_terms() {
        assert_eq!(ints(&theta_series(ThetaKind::Psi, 10)), vec![1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1]);
        assert_eq!(ints(&theta_series(ThetaKind::Phi, 9)), vec![1, 2, 0, 0, 2, 0, 0, 0, 0, 2]);
    }

    #[test]
    fn sum_equals_product_order_120() {
        for kind in ThetaKind::ALL {
            let s = theta_series(kind, 120);
            let p = theta_product(kind, 120);
            assert!(s.agrees_with(&p).unwrap(), "{kind:?}");
            assert_eq!(s.top(), 120);
            assert_eq!(p.top(), 120);
        }
    }

    #[test]
    fn cf_first_convergent_and_depth() {
        let v0 = cf_series(0);
        assert_eq!(v0.lattice(), 3);
        assert_eq!(v0.first_nonzero().map(|(e, c)| (e, c.clone())), Some((1, Rational::one())));
        let n = 40;
        let a = cf_unit_series_depth(n, n + 2);
        let b = cf_unit_series_depth(n, n + 7);
        assert_eq!(a, b);
    }

    #[test]
    fn cf_matches_theta_quotient() {
        // 1 + 1/V^3 = psi(q)^4 / (q psi(q^3)^4)
        let n = 60;
        let v = cf_series(n + 4);
        let lhs = QSeries::one(3, 3 * n + 9).add(&v.pow_int(3).unwrap().inverse().unwrap()).unwrap();
        let psi = theta_series(ThetaKind::Psi, n + 4);
        let psi3 = psi.substitute_monomial(1, q(3)).unwrap();
        let qm = QSeries::monomial(1, 1, Rational::one(), n + 10);
        let rhs = psi.pow_int(4).unwrap().div(&qm.mul(&psi3.pow_int(4).unwrap()).unwrap()).unwrap();
        let diff = lhs.sub(&rhs).unwrap();
        assert!(diff.top() >= 3 * n, "known through x^{}", diff.top());
        assert!(diff.is_zero(), "{diff}");
    }

    #[test]
    fn lattice_round_trip() {
        let v = cf_series(10);
        let up = v.to_lattice(12).unwrap();
        assert_eq!(up.reduce_to(3), v);
        assert!(matches!(v.to_lattice(30), Err(SeriesError::LatticeOverflow { .. })));
        let h = QSeries::monomial(4, 1, Rational::one(), 8);
        assert!(matches!(h.mul(&QSeries::monomial(7, 1, Rational::one(), 8)), Err(SeriesError::LatticeOverflow { .. })));
    }

    #[test]
    fn laurent_floor() {
        let a = QSeries::monomial(1, 3, Rational::one(), 30);
        assert!(a.inverse().is_ok());
        let b = QSeries::monomial(1, 5, Rational::one(), 30);
        assert!(matches!(b.inverse(), Err(SeriesError::LaurentOverflow { .. })));
    }

    #[test]
    fn display() {
        let s = QSeries::from_ints(&[1, -2, 0, 3], 3);
        assert_eq!(s.to_string(), "1 - 2*q + 3*q^3 + O(q^(4))");
    }

    fn arb_series() -> impl Strategy<Value = QSeries> {
        (
            prop::sample::select(vec![1u32, 2, 3, 4]),
            -1i64..3,
            prop::collection::vec((-5i64..6, 1i64..4), 1..14),
            0i64..4,
        )
            .prop_map(|(d, low, cs, extra)| {
                let coeffs: Vec<Rational> = cs
                    .into_iter()
                    .map(|(n, den)| Rational::new(n.into(), den.into()))
                    .collect();
                let top = low + coeffs.len() as i64 - 1 + extra;
                QSeries::with_top(d, low, top, coeffs)
            })
    }

    fn arb_unit() -> impl Strategy<Value = QSeries> {
        (prop::sample::select(vec![1u32, 2, 3]), prop::collection::vec(-4i64..5, 0..14)).prop_map(|(d, cs)| {
            let mut c = vec![Rational::one()];
            c.extend(cs.into_iter().map(rat));
            QSeries::new(d, 0, c)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ring_axioms(a in arb_series(), b in arb_series(), c in arb_series()) {
            prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
            let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
            let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
            prop_assert!(ab_c.agrees_with(&a_bc).unwrap());
            let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
            let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
            prop_assert!(lhs.agrees_with(&rhs).unwrap());
            let sum_assoc = a.add(&b).unwrap().add(&c).unwrap();
            prop_assert!(sum_assoc.agrees_with(&a.add(&b.add(&c).unwrap()).unwrap()).unwrap());
        }

        #[test]
        fn inverse_defining_equation(a in arb_series()) {
            prop_assume!(!a.is_zero());
            let inv = a.inverse().unwrap();
            let prod = a.mul(&inv).unwrap();
            let one = QSeries::one(a.lattice(), prod.top());
            prop_assert!(prod.agrees_with(&one).unwrap());
            let back = inv.inverse().unwrap();
            prop_assert!(back.agrees_with(&a).unwrap());
        }

        #[test]
        fn root_defining_equation(u in arb_unit(), n in 2u32..5) {
            let r = u.nth_root_series(n).unwrap();
            prop_assert!(r.pow_int(n as i64).unwrap().agrees_with(&u).unwrap());
        }

        #[test]
        fn leibniz_rule(a in arb_series(), b in arb_series()) {
            let lhs = a.mul(&b).unwrap().derivative();
            let rhs = a.derivative().mul(&b).unwrap().add(&a.mul(&b.derivative()).unwrap()).unwrap();
            prop_assert!(lhs.agrees_with(&rhs).unwrap());
        }

        #[test]
        fn lattice_unification_lossless(a in arb_series(), k in 1u32..4) {
            let target = a.lattice() * k;
            prop_assume!(target <= DEFAULT_LATTICE_BOUND);
            prop_assert_eq!(a.to_lattice(target).unwrap().reduce_to(a.lattice()), a);
        }

        #[test]
        fn pentagonal_identity(n in 1i64..80) {
            prop_assert_eq!(infinite_product(1, q(1), q(1), 1, n), theta_series(ThetaKind::FMinus, n));
        }
    }
}
