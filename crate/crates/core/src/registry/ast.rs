//! Expression trees and identity records, with a printer whose output the
//! parser reads back to the same tree.

use std::fmt;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};

use crate::closedform::ClosedForm;
use crate::qseries::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Phi,
    Psi,
    /// `f(y)`, with `f(-q) = (q;q)_inf`
    F,
    /// `chi(y)`, with `chi(-q) = (q;q^2)_inf`
    Chi,
    V,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Phi => "phi",
            Func::Psi => "psi",
            Func::F => "f",
            Func::Chi => "chi",
            Func::V => "V",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "phi" => Func::Phi,
            "psi" => Func::Psi,
            "f" => Func::F,
            "chi" => Func::Chi,
            "V" => Func::V,
            _ => return None,
        })
    }
}

/// Variable a monomial argument is built on: `q`, or `t` inside `int`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Base {
    Q,
    T,
}

impl Base {
    pub fn name(self) -> &'static str {
        match self {
            Base::Q => "q",
            Base::T => "t",
        }
    }
}

/// `sign * base^exp` with `exp > 0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub base: Base,
    pub sign: i8,
    pub exp: Ratio<i64>,
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sign < 0 {
            f.write_str("-")?;
        }
        f.write_str(self.base.name())?;
        if self.exp.is_one() {
            Ok(())
        } else {
            write_exponent(f, &self.exp)
        }
    }
}

fn write_exponent(f: &mut fmt::Formatter<'_>, e: &Ratio<i64>) -> fmt::Result {
    if e.is_integer() && *e.numer() > 0 {
        write!(f, "^{}", e.numer())
    } else if e.is_integer() {
        write!(f, "^({})", e.numer())
    } else {
        write!(f, "^({}/{})", e.numer(), e.denom())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    Gamma34,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Exact literal; decimals in the source are read exactly.
    Num(Rational),
    /// `q`, `t`, `alpha`, `beta`, or a `let` name.
    Var(String),
    Const(Constant),
    Call(Func, Monomial),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Ratio<i64>),
    /// `root(n, x)`, printed as `sqrt`/`cbrt` for `n = 2, 3`.
    Root(u32, Box<Expr>),
    Exp(Box<Expr>),
    /// `diff(x)`: `d/dq`, series records only.
    Diff(Box<Expr>),
    /// `at(x, q=v)`: `x` with `q` bound to the number `v`.
    At(Box<Expr>, Box<Expr>),
    /// `int(body, lo, hi)` over the variable `t`.
    Int(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(n: i64) -> Expr {
        Expr::Num(Rational::from_integer(BigInt::from(n)))
    }

    pub fn children(&self) -> Vec<&Expr> {
        use Expr::*;
        match self {
            Num(_) | Var(_) | Const(_) | Call(..) => vec![],
            Neg(a) | Pow(a, _) | Root(_, a) | Exp(a) | Diff(a) => vec![a],
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | At(a, b) => vec![a, b],
            Int(a, b, c) => vec![a, b, c],
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().iter().any(|c| c.any(pred))
    }

    /// Convert a constant subtree (no variables, calls or calculus) into a
    /// [`ClosedForm`].
    pub fn to_closed_form(&self) -> Option<ClosedForm> {
        use Expr::*;
        Some(match self {
            Num(r) => ClosedForm::from(r.clone()),
            Const(Constant::Pi) => ClosedForm::Pi,
            Const(Constant::Gamma34) => ClosedForm::Gamma34,
            Neg(a) => a.to_closed_form()?.neg(),
            Add(a, b) => a.to_closed_form()?.add(b.to_closed_form()?),
            Sub(a, b) => a.to_closed_form()?.sub(b.to_closed_form()?),
            Mul(a, b) => a.to_closed_form()?.mul(b.to_closed_form()?),
            Div(a, b) => a.to_closed_form()?.div(b.to_closed_form()?),
            Pow(a, e) => a.to_closed_form()?.pow(*e.numer(), *e.denom() as u32),
            Root(n, a) => a.to_closed_form()?.root(*n),
            Exp(a) => a.to_closed_form()?.exp(),
            Var(_) | Call(..) | Diff(_) | At(..) | Int(..) => return None,
        })
    }

    fn precedence(&self) -> u8 {
        use Expr::*;
        match self {
            Add(..) | Sub(..) => 1,
            Neg(_) => 1,
            Mul(..) | Div(..) => 2,
            Num(r) if r.is_negative() => 1,
            Num(r) if !r.is_integer() && short_decimal(r).is_none() => 2,
            Pow(..) => 4,
            _ => 5,
        }
    }
}

struct Wrap<'a>(&'a Expr, u8);

impl fmt::Display for Wrap<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.precedence() < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, r: &Rational) -> fmt::Result {
    if r.is_integer() {
        write!(f, "{}", r.numer())
    } else if let Some(s) = short_decimal(r) {
        f.write_str(&s)
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

/// Decimal text for rationals whose denominator is `2^a 5^b` with at most
/// forty digits after the point.
fn short_decimal(r: &Rational) -> Option<String> {
    let mut den = r.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let (mut a, mut b) = (0u32, 0u32);
    while (&den % &two).is_zero() {
        den /= &two;
        a += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        b += 1;
    }
    if !den.is_one() {
        return None;
    }
    let places = a.max(b);
    if places > 40 {
        return None;
    }
    let scale = num_traits::pow(BigInt::from(10), places as usize);
    let scaled = (r * Rational::from_integer(scale)).to_integer();
    let neg = scaled.is_negative();
    let digits = scaled.abs().to_string();
    let width = places as usize + 1;
    let padded = format!("{digits:0>width$}");
    let (int, frac) = padded.split_at(padded.len() - places as usize);
    Some(format!("{}{}.{}", if neg { "-" } else { "" }, int, frac))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        match self {
            Num(r) => write_rational(f, r),
            Var(v) => f.write_str(v),
            Const(Constant::Pi) => f.write_str("pi"),
            Const(Constant::Gamma34) => f.write_str("gamma34"),
            Call(func, m) => write!(f, "{}({})", func.name(), m),
            Neg(a) if matches!(**a, Num(ref r) if !r.is_negative()) => write!(f, "-({a})"),
            Neg(a) => write!(f, "-{}", Wrap(a, 2)),
            Add(a, b) => write!(f, "{} + {}", Wrap(a, 1), Wrap(b, 2)),
            Sub(a, b) => write!(f, "{} - {}", Wrap(a, 1), Wrap(b, 2)),
            Mul(a, b) => write!(f, "{}*{}", Wrap(a, 2), Wrap(b, 3)),
            Div(a, b) => write!(f, "{}/{}", Wrap(a, 2), Wrap(b, 3)),
            Pow(a, e) => {
                write!(f, "{}", Wrap(a, 5))?;
                write_exponent(f, e)
            }
            Root(2, a) => write!(f, "sqrt({a})"),
            Root(3, a) => write!(f, "cbrt({a})"),
            Root(n, a) => write!(f, "root({n}, {a})"),
            Exp(a) => write!(f, "exp({a})"),
            Diff(a) => write!(f, "diff({a})"),
            At(a, v) => write!(f, "at({a}, q={v})"),
            Int(body, lo, hi) => write!(f, "int({body}, {lo}, {hi})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointSpec {
    Q(Expr),
    AlphaBeta(Expr, Expr),
}

impl fmt::Display for PointSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointSpec::Q(e) => write!(f, "q={e}"),
            PointSpec::AlphaBeta(a, b) => write!(f, "alpha={a} beta={b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordKind {
    Series { order: u32, lattice: u32 },
    Numeric { digits: u32, points: Vec<PointSpec> },
}

impl RecordKind {
    pub fn label(&self) -> &'static str {
        match self {
            RecordKind::Series { .. } => "series",
            RecordKind::Numeric { .. } => "numeric",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRecord {
    pub id: String,
    pub kind: RecordKind,
    pub reference: String,
    pub lets: Vec<(String, Expr)>,
    pub lhs: Expr,
    pub rhs: Expr,
    pub note: Option<String>,
}

impl IdentityRecord {
    /// Records whose note starts with "corrected" deviate from the printed source.
    pub fn is_corrected(&self) -> bool {
        self.note.as_deref().is_some_and(|n| n.starts_with("corrected"))
    }

    pub fn size(&self) -> usize {
        self.lhs.size() + self.rhs.size() + self.lets.iter().map(|(_, e)| e.size()).sum::<usize>()
    }
}

impl fmt::Display for IdentityRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "identity {} ", self.id)?;
        match &self.kind {
            RecordKind::Series { order, lattice } => {
                write!(f, "series order={order}")?;
                if *lattice != 1 {
                    write!(f, " lattice={lattice}")?;
                }
            }
            RecordKind::Numeric { digits, points } => {
                write!(f, "numeric digits={digits} at ")?;
                for (i, p) in points.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
            }
        }
        let quoted = self.reference.replace('\\', "\\\\").replace('"', "\\\"");
        writeln!(f, " ref \"{quoted}\"")?;
        for (name, e) in &self.lets {
            writeln!(f, "let {name} = {e}")?;
        }
        writeln!(f, "lhs: {}", self.lhs)?;
        writeln!(f, "rhs: {}", self.rhs)?;
        if let Some(n) = &self.note {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// Corpus text in canonical form; blank line between records.
pub fn print_corpus(records: &[IdentityRecord]) -> String {
    records.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("\n")
}
