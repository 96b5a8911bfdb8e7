//! Dispatch of identity records to the exact series engine or the numeric
//! engine, and the reports they produce.

use std::collections::HashMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::One;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::ast::{Base, Constant, Expr, Func, IdentityRecord, Monomial, PointSpec, RecordKind};
use crate::closedform::ClosedFormError;
use crate::numkern::{const_pi, gamma_three_quarters, working_digits, BigReal, Digits, NumError};
use crate::qseries::{cf_unit_series, theta_series, QSeries, Rational, SeriesError, ThetaKind};
use crate::quadrature::{integrate, Integrand};
use crate::specfun::{theta_num, theta_num_integrand, v_cf_num};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Numeric(#[from] NumError),
    #[error(transparent)]
    ClosedForm(#[from] ClosedFormError),
    #[error("intermediate needs lattice q^(1/{needed}) but the record declares q^(1/{declared})")]
    Lattice { needed: u32, declared: u32 },
    #[error("{0} is not available in this kind of record")]
    Unsupported(String),
    #[error("unbound name {0}")]
    Unbound(String),
    #[error("series precision stalled below q^{0}")]
    PrecisionStall(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }
}

/// Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub id: String,
    pub kind: String,
    pub status: Status,
    pub detail: String,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Overrides the order declared by series records.
    pub order: Option<u32>,
    /// Overrides the digits declared by numeric records.
    pub digits: Option<u32>,
    /// Report `elapsed_ms = 0` so output is reproducible byte for byte.
    pub no_timing: bool,
}

fn q_power(e: Ratio<i64>, coeff: Rational, top_q: i64) -> QSeries {
    let l = *e.denom();
    QSeries::monomial(l as u32, *e.numer(), coeff, top_q * l)
}

struct SeriesEval {
    /// Working order in q; exact leaves are known through it.
    work: i64,
    lattice: u32,
    lets: HashMap<String, QSeries>,
}

impl SeriesEval {
    fn check(&self, s: QSeries) -> Result<QSeries, EvalError> {
        if self.lattice % s.lattice() != 0 {
            return Err(EvalError::Lattice {
                needed: s.lattice(),
                declared: self.lattice,
            });
        }
        Ok(s)
    }

    /// `g(sign * q^m)` for a lattice-1 series `g` generated by `make(k)`
    /// through `q^k`.
    fn substituted(&self, sign: i8, m: Ratio<i64>, make: impl Fn(i64) -> QSeries) -> Result<QSeries, EvalError> {
        let k = (Ratio::from_integer(self.work) / m).ceil().to_integer() + 1;
        Ok(make(k).substitute_monomial(sign, m)?)
    }

    fn call(&self, func: Func, m: &Monomial) -> Result<QSeries, EvalError> {
        if m.base != Base::Q {
            return Err(EvalError::Unsupported("int variable t".into()));
        }
        let (s, e) = (m.sign, m.exp);
        let theta = |kind: ThetaKind, sign: i8| self.substituted(sign, e, |k| theta_series(kind, k));
        match func {
            Func::Phi => theta(ThetaKind::Phi, s),
            Func::Psi => theta(ThetaKind::Psi, s),
            Func::F => theta(ThetaKind::FMinus, -s),
            Func::Chi => theta(ThetaKind::ChiMinus, -s),
            Func::V => {
                // V(y) = y^(1/3) U(y), real cube root of y = s q^e
                let u = self.substituted(s, e, cf_unit_series)?;
                let lead = q_power(e / 3, Rational::from_integer(BigInt::from(s)), self.work + 1);
                Ok(lead.mul(&u)?)
            }
        }
    }

    fn eval(&self, e: &Expr) -> Result<QSeries, EvalError> {
        use Expr::*;
        let top = self.work;
        let s = match e {
            Num(r) => QSeries::constant(r.clone(), 1, top),
            Var(v) if v == "q" => q_power(Ratio::one(), Rational::one(), top),
            Var(v) => self.lets.get(v).cloned().ok_or_else(|| EvalError::Unbound(v.clone()))?,
            Call(func, m) => self.call(*func, m)?,
            Neg(a) => self.eval(a)?.neg(),
            Add(a, b) => self.eval(a)?.add(&self.eval(b)?)?,
            Sub(a, b) => self.eval(a)?.sub(&self.eval(b)?)?,
            Mul(a, b) => self.eval(a)?.mul(&self.eval(b)?)?,
            Div(a, b) => self.eval(a)?.div(&self.eval(b)?)?,
            Pow(a, p) => {
                let a = self.eval(a)?;
                if p.is_integer() {
                    a.pow_int(*p.numer())?
                } else {
                    a.pow_rational(*p.numer(), *p.denom() as u32)?
                }
            }
            Root(n, a) => self.eval(a)?.nth_root_series(*n)?,
            Diff(a) => self.eval(a)?.derivative(),
            Const(_) => return Err(EvalError::Unsupported("a constant".into())),
            Exp(_) => return Err(EvalError::Unsupported("exp".into())),
            At(..) => return Err(EvalError::Unsupported("at".into())),
            Int(..) => return Err(EvalError::Unsupported("int".into())),
        };
        self.check(s)
    }
}

/// `lhs - rhs` as a series known at least through `q^order`.
pub fn series_difference(rec: &IdentityRecord, order: u32) -> Result<QSeries, EvalError> {
    let RecordKind::Series { lattice, .. } = rec.kind else {
        return Err(EvalError::Unsupported("a numeric record".into()));
    };
    let order = order as i64;
    let mut work = order + 4;
    for _ in 0..6 {
        let mut ev = SeriesEval {
            work,
            lattice,
            lets: HashMap::new(),
        };
        for (name, e) in &rec.lets {
            let s = ev.eval(e)?;
            ev.lets.insert(name.clone(), s);
        }
        let diff = ev.eval(&rec.lhs)?.sub(&ev.eval(&rec.rhs)?)?;
        let known = Ratio::new(diff.top(), diff.lattice() as i64);
        if known >= Ratio::from_integer(order) {
            return Ok(diff);
        }
        let short = (Ratio::from_integer(order) - known).ceil().to_integer();
        work += short.max(1) + 4;
    }
    Err(EvalError::PrecisionStall(order))
}

fn exponent_text(e: Ratio<i64>) -> String {
    if e.is_integer() {
        e.numer().to_string()
    } else {
        format!("({}/{})", e.numer(), e.denom())
    }
}

fn timed(rec: &IdentityRecord, opts: &VerifyOptions, run: impl FnOnce() -> (Status, String)) -> VerificationReport {
    let start = Instant::now();
    let (status, detail) = run();
    let elapsed_ms = if opts.no_timing {
        0
    } else {
        start.elapsed().as_millis() as u64
    };
    VerificationReport {
        id: rec.id.clone(),
        kind: rec.kind.label().into(),
        status,
        detail,
        elapsed_ms,
    }
}

/// Exact check: every coefficient of `lhs - rhs` through `q^order` is zero.
pub fn verify_series(rec: &IdentityRecord, order: u32) -> VerificationReport {
    verify_series_with(rec, order, &VerifyOptions::default())
}

fn verify_series_with(rec: &IdentityRecord, order: u32, opts: &VerifyOptions) -> VerificationReport {
    timed(rec, opts, || match series_difference(rec, order) {
        Err(e) => (Status::Error, e.to_string()),
        Ok(diff) => {
            let l = diff.lattice() as i64;
            let limit = order as i64 * l;
            match diff.first_nonzero() {
                Some((e, c)) if e <= limit => (
                    Status::Fail,
                    format!("first nonzero coefficient at q^{}: {}", exponent_text(Ratio::new(e, l)), c),
                ),
                _ => (Status::Pass, format!("all coefficients zero through q^{order}")),
            }
        }
    })
}

#[derive(Clone)]
struct NumEnv<'a> {
    digits: Digits,
    q: Option<BigReal>,
    t: Option<BigReal>,
    alpha: Option<BigReal>,
    beta: Option<BigReal>,
    lets: &'a HashMap<String, BigReal>,
}

impl<'a> NumEnv<'a> {
    fn new(digits: Digits, lets: &'a HashMap<String, BigReal>) -> Self {
        NumEnv {
            digits,
            q: None,
            t: None,
            alpha: None,
            beta: None,
            lets,
        }
    }

    fn var(&self, v: &str) -> Result<BigReal, EvalError> {
        let bound = match v {
            "q" => self.q.clone(),
            "t" => self.t.clone(),
            "alpha" => self.alpha.clone(),
            "beta" => self.beta.clone(),
            _ => self.lets.get(v).cloned(),
        };
        bound.ok_or_else(|| EvalError::Unbound(v.into()))
    }

    fn call(&self, func: Func, m: &Monomial) -> Result<BigReal, EvalError> {
        let integrand = m.base == Base::T;
        let x = self.var(m.base.name())?;
        let xe = if m.exp.is_integer() {
            x.powi(*m.exp.numer())?
        } else {
            x.pow_rational(*m.exp.numer(), *m.exp.denom() as u32)?
        };
        let y = if m.sign < 0 { -xe } else { xe };
        let d = self.digits;
        let theta = |kind: ThetaKind, y: &BigReal| {
            if integrand {
                theta_num_integrand(kind, y, d)
            } else {
                theta_num(kind, y, d)
            }
        };
        Ok(match func {
            Func::Phi => theta(ThetaKind::Phi, &y)?,
            Func::Psi => theta(ThetaKind::Psi, &y)?,
            Func::F => theta(ThetaKind::FMinus, &-y)?,
            Func::Chi => theta(ThetaKind::ChiMinus, &-y)?,
            Func::V => v_cf_num(&y, d)?,
        })
    }

    fn eval(&self, e: &Expr) -> Result<BigReal, EvalError> {
        use Expr::*;
        if !matches!(e, Num(_) | Const(_)) {
            if let Some(cf) = e.to_closed_form() {
                return Ok(cf.eval(self.digits)?);
            }
        }
        let d = self.digits;
        Ok(match e {
            Num(r) => BigReal::from_ratio(r, d),
            Const(Constant::Pi) => const_pi(d),
            Const(Constant::Gamma34) => gamma_three_quarters(d),
            Var(v) => self.var(v)?,
            Call(func, m) => self.call(*func, m)?,
            Neg(a) => -self.eval(a)?,
            Add(a, b) => &self.eval(a)? + &self.eval(b)?,
            Sub(a, b) => &self.eval(a)? - &self.eval(b)?,
            Mul(a, b) => &self.eval(a)? * &self.eval(b)?,
            Div(a, b) => self.eval(a)?.try_div(&self.eval(b)?)?,
            Pow(a, p) => {
                let a = self.eval(a)?;
                if p.is_integer() {
                    a.powi(*p.numer())?
                } else {
                    a.pow_rational(*p.numer(), *p.denom() as u32)?
                }
            }
            Root(n, a) => self.eval(a)?.nth_root(*n)?,
            Exp(a) => self.eval(a)?.exp(),
            At(body, v) => {
                let v = self.eval(v)?;
                let mut inner = self.clone();
                inner.q = Some(v);
                inner.eval(body)?
            }
            Int(body, lo, hi) => {
                let (lo, hi) = (self.eval(lo)?, self.eval(hi)?);
                let env = self.clone();
                let f = Integrand::new(move |t: &BigReal| {
                    let mut inner = env.clone();
                    inner.t = Some(t.clone());
                    inner.eval(body).map_err(|e| match e {
                        EvalError::Numeric(n) => n,
                        other => NumError::Domain(other.to_string()),
                    })
                });
                let tol = BigReal::pow10(-(d.get() as i32) + 5, d);
                integrate(&f, &lo, &hi, &tol)?.value
            }
            Diff(_) => return Err(EvalError::Unsupported("diff".into())),
        })
    }
}

/// Evaluate a numeric expression with `q` bound to `q` (if given).
pub fn eval_numeric(e: &Expr, q: Option<&BigReal>, digits: Digits) -> Result<BigReal, EvalError> {
    let lets = HashMap::new();
    let mut env = NumEnv::new(digits, &lets);
    env.q = q.cloned();
    env.eval(e)
}

/// Both sides of a numeric record at one point, at precision `w`.
pub fn sides_at(rec: &IdentityRecord, p: &PointSpec, w: Digits) -> Result<(BigReal, BigReal), EvalError> {
    let empty = HashMap::new();
    let mut base = NumEnv::new(w, &empty);
    match p {
        PointSpec::Q(v) => base.q = Some(base.eval(v)?),
        PointSpec::AlphaBeta(a, b) => {
            base.alpha = Some(base.eval(a)?);
            base.beta = Some(base.eval(b)?);
        }
    }
    let mut lets = HashMap::new();
    for (name, e) in &rec.lets {
        let env = NumEnv { lets: &lets, ..base.clone() };
        let v = env.eval(e)?;
        lets.insert(name.clone(), v);
    }
    let env = NumEnv { lets: &lets, ..base };
    Ok((env.eval(&rec.lhs)?, env.eval(&rec.rhs)?))
}

/// `(|lhs - rhs|, |lhs|)` at one point.
fn residual_at(rec: &IdentityRecord, p: &PointSpec, w: Digits) -> Result<(BigReal, BigReal), EvalError> {
    let (l, r) = sides_at(rec, p, w)?;
    Ok(((&l - &r).abs(), l.abs()))
}

/// Numeric check at every point: `|lhs - rhs| <= 10^-d max(1, |lhs|)`.
pub fn verify_numeric(rec: &IdentityRecord, digits: u32) -> VerificationReport {
    verify_numeric_with(rec, digits, &VerifyOptions::default())
}

fn verify_numeric_with(rec: &IdentityRecord, digits: u32, opts: &VerifyOptions) -> VerificationReport {
    timed(rec, opts, || {
        let RecordKind::Numeric { points, .. } = &rec.kind else {
            return (Status::Error, EvalError::Unsupported("a series record".into()).to_string());
        };
        let d = match Digits::new(digits) {
            Ok(d) => d,
            Err(e) => return (Status::Error, e.to_string()),
        };
        let w = working_digits(d, rec.size());
        let mut worst: Option<BigReal> = None;
        let mut failed = None;
        for p in points {
            let (res, lhs) = match residual_at(rec, p, w) {
                Ok(v) => v,
                Err(e) => return (Status::Error, format!("at {}: {e}", p)),
            };
            let one = BigReal::one(w);
            let scale = if lhs > one { lhs } else { one };
            let bound = &BigReal::pow10(-(digits as i32), w) * &scale;
            if res > bound && failed.is_none() {
                failed = Some(format!("residual {} at {}", res.to_sci_string(3), p));
            }
            if worst.as_ref().map_or(true, |x| res > *x) {
                worst = Some(res);
            }
        }
        if let Some(msg) = failed {
            return (Status::Fail, msg);
        }
        let worst = worst.map_or("0".into(), |r| if r.is_zero() { "0".into() } else { r.to_sci_string(3) });
        (Status::Pass, format!("max residual {worst} over {} point(s)", points.len()))
    })
}

/// Verify one record with its declared order or digits unless overridden.
pub fn verify_record(rec: &IdentityRecord, opts: &VerifyOptions) -> VerificationReport {
    match &rec.kind {
        RecordKind::Series { order, .. } => verify_series_with(rec, opts.order.unwrap_or(*order), opts),
        RecordKind::Numeric { digits, .. } => verify_numeric_with(rec, opts.digits.unwrap_or(*digits), opts),
    }
}

/// Reports in input order, whether or not records run concurrently.
pub fn verify_all(records: &[IdentityRecord], opts: &VerifyOptions, parallel: bool) -> Vec<VerificationReport> {
    if parallel {
        records.par_iter().map(|r| verify_record(r, opts)).collect()
    } else {
        records.iter().map(|r| verify_record(r, opts)).collect()
    }
}

/// One integer constant that mutation testing may perturb.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IntegerSite {
    Literal,
    Power,
    Argument,
}

fn visit_sites(e: &mut Expr, out: &mut Vec<IntegerSite>, target: Option<usize>, delta: i64) {
    let hit = |kind: IntegerSite, out: &mut Vec<IntegerSite>| {
        let here = out.len();
        out.push(kind);
        target == Some(here)
    };
    match e {
        Expr::Num(r) if r.is_integer() => {
            if hit(IntegerSite::Literal, out) {
                *r += Rational::from_integer(BigInt::from(delta));
            }
        }
        Expr::Pow(a, p) => {
            visit_sites(a, out, target, delta);
            if p.is_integer() && hit(IntegerSite::Power, out) {
                let mut n = p.numer() + delta;
                if n == 0 {
                    n += delta;
                }
                *p = Ratio::from_integer(n);
            }
        }
        Expr::Call(_, m) if m.exp.is_integer() => {
            if hit(IntegerSite::Argument, out) {
                let n = (m.exp.numer() + delta.abs()).max(1);
                m.exp = Ratio::from_integer(n);
            }
        }
        _ => {
            for c in children_mut(e) {
                visit_sites(c, out, target, delta);
            }
        }
    }
}

fn children_mut(e: &mut Expr) -> Vec<&mut Expr> {
    use Expr::*;
    match e {
        Num(_) | Var(_) | Const(_) | Call(..) => vec![],
        Neg(a) | Pow(a, _) | Root(_, a) | Exp(a) | Diff(a) => vec![a.as_mut()],
        Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | At(a, b) => vec![a.as_mut(), b.as_mut()],
        Int(a, b, c) => vec![a.as_mut(), b.as_mut(), c.as_mut()],
    }
}

fn walk_record(rec: &mut IdentityRecord, target: Option<usize>, delta: i64) -> Vec<IntegerSite> {
    let mut out = Vec::new();
    for (_, e) in rec.lets.iter_mut() {
        visit_sites(e, &mut out, target, delta);
    }
    visit_sites(&mut rec.lhs, &mut out, target, delta);
    visit_sites(&mut rec.rhs, &mut out, target, delta);
    out
}

/// Integer constants of a record in a fixed traversal order: literals,
/// integer powers and integer argument exponents.
pub fn integer_sites(rec: &IdentityRecord) -> Vec<IntegerSite> {
    walk_record(&mut rec.clone(), None, 0)
}

/// Copy of `rec` with integer site `site` moved by `delta` (argument
/// exponents stay positive, powers stay nonzero).
pub fn mutate_integer(rec: &IdentityRecord, site: usize, delta: i64) -> IdentityRecord {
    let mut out = rec.clone();
    walk_record(&mut out, Some(site), delta);
    out
}

/// Smallest exponent whose coefficient differs, for diagnostics.
pub fn first_mismatch(diff: &QSeries) -> Option<(Ratio<i64>, Rational)> {
    diff.first_nonzero()
        .map(|(e, c)| (Ratio::new(e, diff.lattice() as i64), c.clone()))
}
