//! Double-exponential (tanh-sinh) quadrature at arbitrary precision, and the
//! two integral representations of the cubic continued fraction.

use rayon::prelude::*;

use crate::numkern::{const_pi, BigReal, Digits, NumError, NumResult};
use crate::specfun::{theta_num, theta_num_integrand, ThetaKind, Q_CAP};

pub const MIN_LEVELS: u32 = 3;
pub const MAX_LEVEL: u32 = 14;

/// Nodes evaluated concurrently before the stopping rule looks at them.
const BATCH: usize = 8;

/// An integrand on `(a, b)`, with declared endpoint behavior.
pub struct Integrand<'a> {
    evaluator: Box<dyn Fn(&BigReal) -> NumResult<BigReal> + Send + Sync + 'a>,
    pub singular_low: bool,
    pub singular_high: bool,
}

impl<'a> Integrand<'a> {
    pub fn new(f: impl Fn(&BigReal) -> NumResult<BigReal> + Send + Sync + 'a) -> Self {
        Integrand {
            evaluator: Box::new(f),
            singular_low: false,
            singular_high: false,
        }
    }

    pub fn singular(mut self, low: bool, high: bool) -> Self {
        self.singular_low = low;
        self.singular_high = high;
        self
    }

    pub fn eval(&self, t: &BigReal) -> NumResult<BigReal> {
        (self.evaluator)(t)
    }
}

#[derive(Debug, Clone)]
pub struct Quadrature {
    pub value: BigReal,
    /// Difference between the last two levels.
    pub error: BigReal,
    pub levels: u32,
}

struct Rule<'a> {
    a: BigReal,
    b: BigReal,
    len: BigReal,
    half_pi: BigReal,
    pi: BigReal,
    f: &'a Integrand<'a>,
    digits: Digits,
}

impl Rule<'_> {
    /// `w(t) f(x(t))` for node `t`; the side picks the endpoint that `x` is
    /// measured from, so nodes near either end keep full relative precision.
    fn term(&self, t: &BigReal) -> NumResult<BigReal> {
        let st = (t.exp() - (-t).exp()).div_i64(2)?;
        let ct = (t.exp() + (-t).exp()).div_i64(2)?;
        let u2 = (&self.half_pi * &st).mul_i64(2);
        let one = BigReal::one(self.digits);
        // E = e^(2u); both E/(1+E) and 1/(1+E) are formed from e^(-2|u|)
        let e = (-u2.abs()).exp();
        let denom = &one + &e;
        let small = e.try_div(&denom)?;
        let x = if t.is_negative() {
            &self.a + &(&self.len * &small)
        } else {
            &self.b - &(&self.len * &small)
        };
        if x <= self.a || x >= self.b {
            // node rounded onto an endpoint
            return Ok(BigReal::zero(self.digits));
        }
        let w = &(&(&self.len * &self.pi) * &ct) * &e.try_div(&denom.square())?;
        let fx = self.f.eval(&x)?;
        Ok(&w * &fx.with_precision(self.digits))
    }

    /// Sum `w f` over nodes `t = k h` for the listed `k`, on one side, stopping
    /// after two consecutive negligible terms or at `t_stop`. Returns the sum
    /// and the last `t` reached.
    fn sweep(&self, h: f64, ks: impl Iterator<Item = i64>, sign: i64, t_stop: Option<f64>, negligible: &BigReal) -> NumResult<(BigReal, f64)> {
        let mut sum = BigReal::zero(self.digits);
        let mut quiet = 0;
        let mut last_t = 0.0;
        let mut ks = ks.peekable();
        let hr = BigReal::from_f64(h, self.digits)?;
        loop {
            let batch: Vec<i64> = ks
                .by_ref()
                .take_while(|&k| t_stop.map_or(true, |s| (k as f64) * h <= s + 1e-12))
                .take(BATCH)
                .collect();
            if batch.is_empty() {
                return Ok((sum, last_t));
            }
            let terms: Vec<NumResult<BigReal>> = batch
                .par_iter()
                .map(|&k| self.term(&hr.mul_i64(sign * k)))
                .collect();
            for (k, term) in batch.iter().zip(terms) {
                let term = term?;
                last_t = *k as f64 * h;
                let small = term.abs() <= *negligible;
                sum = &sum + &term;
                if t_stop.is_none() {
                    quiet = if small { quiet + 1 } else { 0 };
                    if quiet >= 2 {
                        return Ok((sum, last_t));
                    }
                }
            }
            if ks.peek().is_none() {
                return Ok((sum, last_t));
            }
        }
    }
}

/// `int_a^b f` to absolute tolerance `tol`, at the precision of `a` and `b`.
pub fn integrate(f: &Integrand, a: &BigReal, b: &BigReal, tol: &BigReal) -> NumResult<Quadrature> {
    let digits = a.precision().min(b.precision());
    if a > b {
        return Err(NumError::Domain("integration interval must have a <= b".into()));
    }
    if a == b {
        let z = BigReal::zero(digits);
        return Ok(Quadrature {
            value: z.clone(),
            error: z,
            levels: 0,
        });
    }
    let pi = const_pi(digits);
    let rule = Rule {
        a: a.clone(),
        b: b.clone(),
        len: b - a,
        half_pi: pi.div_i64(2)?,
        pi,
        f,
        digits,
    };
    let negligible = BigReal::pow10(-(digits.get() as i32) - 5, digits);

    // level 0: h = 1, integer nodes, which also fixes how far each side reaches
    let centre = rule.term(&BigReal::zero(digits))?;
    let (right, t_hi) = rule.sweep(1.0, 1.., 1, None, &negligible)?;
    let (left, t_lo) = rule.sweep(1.0, 1.., -1, None, &negligible)?;
    let mut total = &(&centre + &right) + &left;
    let mut prev = total.clone();
    let mut error = total.abs();
    for level in 1..=MAX_LEVEL {
        let h = 0.5f64.powi(level as i32);
        let odd = |t_max: f64| (0..).map(|i| 2 * i + 1).take_while(move |&k| (k as f64) * h <= t_max + 1e-12);
        let (r, _) = rule.sweep(h, odd(t_hi), 1, Some(t_hi), &negligible)?;
        let (l, _) = rule.sweep(h, odd(t_lo), -1, Some(t_lo), &negligible)?;
        // S_level = S_{level-1}/2 + h * (new nodes), tracked unscaled
        total = &total + &(&r + &l);
        let scale = BigReal::from_f64(h, digits)?;
        let current = &total * &scale;
        error = (&current - &prev).abs();
        prev = current;
        if level >= MIN_LEVELS && error < *tol {
            return Ok(Quadrature {
                value: prev,
                error,
                levels: level,
            });
        }
    }
    Err(NumError::NoConvergence(format!(
        "quadrature level cap {MAX_LEVEL} reached, last difference {}",
        error.to_sci_string(3)
    )))
}

fn check_open_unit(q: &BigReal) -> NumResult<()> {
    if q.signum() <= 0 || q >= &BigReal::one(q.precision()) {
        return Err(NumError::Domain("integral representations need 0 < q < 1".into()));
    }
    Ok(())
}

/// `phi^2(-t) phi^2(-t^3) / t`; vanishes to all orders at `t = 1`.
pub fn integrand_2_1(digits: Digits) -> Integrand<'static> {
    Integrand::new(move |t: &BigReal| {
        let p1 = theta_num_integrand(ThetaKind::Phi, &-t, digits)?;
        let p3 = theta_num_integrand(ThetaKind::Phi, &-t.powi(3)?, digits)?;
        (&p1 * &p3).square().try_div(t)
    })
}

/// `psi^2(t) psi^2(t^3)`, equal to 1 at `t = 0`.
pub fn integrand_2_2(digits: Digits) -> Integrand<'static> {
    Integrand::new(move |t: &BigReal| {
        let p1 = theta_num(ThetaKind::Psi, t, digits)?;
        let p3 = theta_num(ThetaKind::Psi, &t.powi(3)?, digits)?;
        Ok((&p1 * &p3).square())
    })
}

/// `1 / cbrt(-1 + 9 exp(int_q^1 phi^2(-t) phi^2(-t^3) dt/t))`.
pub fn rhs_2_1(q: &BigReal, digits: Digits) -> NumResult<BigReal> {
    check_open_unit(q)?;
    let w = digits.plus(10);
    let tol = BigReal::pow10(-(digits.get() as i32) - 5, w);
    let int = integrate(&integrand_2_1(w), &q.with_precision(w), &BigReal::one(w), &tol)?;
    let arg = &BigReal::from_i64(9, w) * &int.value.exp() - BigReal::one(w);
    if arg.signum() <= 0 {
        return Err(NumError::Domain("cube-root argument is not positive".into()));
    }
    Ok(arg.nth_root(3)?.recip()?.with_precision(digits))
}

/// `cbrt(1 - exp(-8 int_0^q psi^2(t) psi^2(t^3) dt)) / 2`.
pub fn rhs_2_2(q: &BigReal, digits: Digits) -> NumResult<BigReal> {
    check_open_unit(q)?;
    if q.to_f64() > Q_CAP {
        return Err(NumError::Domain("rhs_2_2 needs q <= 0.9".into()));
    }
    let w = digits.plus(10);
    let tol = BigReal::pow10(-(digits.get() as i32) - 5, w);
    let int = integrate(&integrand_2_2(w), &BigReal::zero(w), &q.with_precision(w), &tol)?;
    let arg = BigReal::one(w) - (&int.value.mul_i64(-8)).exp();
    Ok(arg.nth_root(3)?.div_i64(2)?.with_precision(digits))
}
