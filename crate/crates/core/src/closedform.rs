//! Closed-form constants: nested radicals over the rationals, `pi`,
//! `Gamma(3/4)` and `exp`, evaluated at arbitrary precision.

use std::fmt;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::Signed;
use thiserror::Error;

use crate::numkern::{const_pi, gamma_three_quarters, working_digits, BigReal, Digits, NumError};
use crate::qseries::Rational;

pub const MAX_DEPTH: usize = 32;

/// Precision (digits) of the sign check for even-root bases.
const POSITIVITY_DIGITS: u32 = 30;

/// A base must exceed this at [`POSITIVITY_DIGITS`] to count as positive.
const POSITIVITY_MARGIN_LOG10: f64 = -20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error("even root of a base that is not provably positive: {0}")]
    NegativeEvenRoot(String),
    #[error("division by zero in {0}")]
    DivisionByZero(String),
    #[error("closed form deeper than {MAX_DEPTH}")]
    TooDeep,
    #[error(transparent)]
    Numeric(#[from] NumError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    Int(BigInt),
    Rat(Rational),
    Pi,
    Gamma34,
    Add(Box<ClosedForm>, Box<ClosedForm>),
    Sub(Box<ClosedForm>, Box<ClosedForm>),
    Mul(Box<ClosedForm>, Box<ClosedForm>),
    Div(Box<ClosedForm>, Box<ClosedForm>),
    Neg(Box<ClosedForm>),
    /// `base^(p/r)` with `r > 0`, real root for odd `r`.
    Pow(Box<ClosedForm>, i64, u32),
    Exp(Box<ClosedForm>),
}

impl ClosedForm {
    pub fn int(n: i64) -> Self {
        ClosedForm::Int(BigInt::from(n))
    }

    pub fn rat(n: i64, d: i64) -> Self {
        ClosedForm::Rat(Rational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn add(self, o: Self) -> Self {
        ClosedForm::Add(Box::new(self), Box::new(o))
    }

    pub fn sub(self, o: Self) -> Self {
        ClosedForm::Sub(Box::new(self), Box::new(o))
    }

    pub fn mul(self, o: Self) -> Self {
        ClosedForm::Mul(Box::new(self), Box::new(o))
    }

    pub fn div(self, o: Self) -> Self {
        ClosedForm::Div(Box::new(self), Box::new(o))
    }

    pub fn neg(self) -> Self {
        ClosedForm::Neg(Box::new(self))
    }

    pub fn pow(self, p: i64, r: u32) -> Self {
        assert!(r > 0, "root index must be positive");
        ClosedForm::Pow(Box::new(self), p, r)
    }

    pub fn sqrt(self) -> Self {
        self.pow(1, 2)
    }

    pub fn root(self, n: u32) -> Self {
        self.pow(1, n)
    }

    pub fn exp(self) -> Self {
        ClosedForm::Exp(Box::new(self))
    }

    pub fn depth(&self) -> usize {
        use ClosedForm::*;
        match self {
            Int(_) | Rat(_) | Pi | Gamma34 => 1,
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => 1 + a.depth().max(b.depth()),
            Neg(a) | Pow(a, _, _) | Exp(a) => 1 + a.depth(),
        }
    }

    pub fn size(&self) -> usize {
        use ClosedForm::*;
        match self {
            Int(_) | Rat(_) | Pi | Gamma34 => 1,
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => 1 + a.size() + b.size(),
            Neg(a) | Pow(a, _, _) | Exp(a) => 1 + a.size(),
        }
    }

    /// Value to `digits`, computed with guard digits scaled to the tree size.
    pub fn eval(&self, digits: Digits) -> Result<BigReal, ClosedFormError> {
        if self.depth() > MAX_DEPTH {
            return Err(ClosedFormError::TooDeep);
        }
        let w = working_digits(digits, self.size());
        Ok(self.eval_at(w)?.with_precision(digits))
    }

    fn eval_at(&self, w: Digits) -> Result<BigReal, ClosedFormError> {
        use ClosedForm::*;
        Ok(match self {
            Int(n) => BigReal::from_bigint(n, w),
            Rat(r) => BigReal::from_ratio(r, w),
            Pi => const_pi(w),
            Gamma34 => gamma_three_quarters(w),
            Add(a, b) => a.eval_at(w)? + b.eval_at(w)?,
            Sub(a, b) => a.eval_at(w)? - b.eval_at(w)?,
            Mul(a, b) => a.eval_at(w)? * b.eval_at(w)?,
            Div(a, b) => {
                let den = b.eval_at(w)?;
                if den.is_zero() || den.log10_abs() < -(w.get() as f64) + 3.0 {
                    return Err(ClosedFormError::DivisionByZero(self.to_string()));
                }
                a.eval_at(w)?.try_div(&den)?
            }
            Neg(a) => -a.eval_at(w)?,
            Exp(a) => a.eval_at(w)?.exp(),
            Pow(a, p, r) => {
                let exp = Ratio::new(*p, *r as i64);
                let (p, r) = (*exp.numer(), *exp.denom() as u32);
                if r % 2 == 0 {
                    a.require_positive()?;
                }
                let base = a.eval_at(w)?;
                if p < 0 && base.is_zero() {
                    return Err(ClosedFormError::DivisionByZero(self.to_string()));
                }
                base.pow_rational(p, r)?
            }
        })
    }

    /// Decide `self > 0` at low precision with a safety margin; anything
    /// closer to zero is refused rather than guessed.
    fn require_positive(&self) -> Result<(), ClosedFormError> {
        let probe = self.eval_at(Digits::new(POSITIVITY_DIGITS).expect("30 >= 10"))?;
        if probe.signum() > 0 && probe.log10_abs() > POSITIVITY_MARGIN_LOG10 {
            Ok(())
        } else {
            Err(ClosedFormError::NegativeEvenRoot(self.to_string()))
        }
    }

    fn precedence(&self) -> u8 {
        use ClosedForm::*;
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(_) => 1,
            Int(n) if n.is_negative() => 1,
            Rat(r) if r.is_negative() || !r.is_integer() => 2,
            _ => 5,
        }
    }
}

struct Wrap<'a>(&'a ClosedForm, u8);

impl fmt::Display for Wrap<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.precedence() < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ClosedForm::*;
        match self {
            Int(n) => write!(f, "{n}"),
            Rat(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Pi => f.write_str("pi"),
            Gamma34 => f.write_str("gamma34"),
            Add(a, b) => write!(f, "{}+{}", Wrap(a, 1), Wrap(b, 2)),
            Sub(a, b) => write!(f, "{}-{}", Wrap(a, 1), Wrap(b, 2)),
            Mul(a, b) => write!(f, "{}*{}", Wrap(a, 2), Wrap(b, 3)),
            Div(a, b) => write!(f, "{}/{}", Wrap(a, 2), Wrap(b, 3)),
            Neg(a) => write!(f, "-{}", Wrap(a, 3)),
            Exp(a) => write!(f, "exp({a})"),
            Pow(a, p, r) => match (p, r) {
                (1, 2) => write!(f, "sqrt({a})"),
                (1, 3) => write!(f, "cbrt({a})"),
                (1, n) => write!(f, "root({n},{a})"),
                (p, 1) => write!(f, "{}^{p}", Wrap(a, 5)),
                (p, r) => write!(f, "{}^({p}/{r})", Wrap(a, 5)),
            },
        }
    }
}

impl From<i64> for ClosedForm {
    fn from(n: i64) -> Self {
        ClosedForm::int(n)
    }
}

impl From<Rational> for ClosedForm {
    fn from(r: Rational) -> Self {
        if r.is_integer() {
            ClosedForm::Int(r.to_integer())
        } else {
            ClosedForm::Rat(r)
        }
    }
}
