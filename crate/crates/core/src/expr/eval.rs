use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::poly::{exponent_to_big, Atom, Exponent, Poly};
use super::symbol::Var;
use super::tree::Expr;
use super::ExprError;

/// A value produced by evaluation.
///
/// Exact zeros annihilate products, so a term multiplied by a vanishing
/// factor never turns into a floating-point domain error.
#[derive(Clone, Debug, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Float(f64),
}

impl Number {
    pub fn int(n: i64) -> Number {
        Number::Exact(BigRational::from_integer(n.into()))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Float(x) => *x,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self, Number::Exact(r) if r.is_zero())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_zero(),
            Number::Float(x) => *x == 0.0,
        }
    }

    fn add(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a + b),
            _ => Number::Float(self.to_f64() + other.to_f64()),
        }
    }

    fn mul(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a * b),
            (a, _) if a.is_exact_zero() => Number::int(0),
            (_, b) if b.is_exact_zero() => Number::int(0),
            _ => Number::Float(self.to_f64() * other.to_f64()),
        }
    }

    fn pow(&self, q: Exponent) -> Result<Number, ExprError> {
        if q.is_zero() {
            return Ok(Number::int(1));
        }
        if self.is_zero() {
            if q < Exponent::zero() {
                return Err(ExprError::Domain("division by zero".into()));
            }
            return Ok(Number::int(0));
        }
        if let Number::Exact(r) = self {
            if q.is_integer() {
                return Ok(Number::Exact(r.pow(q.to_integer() as i32)));
            }
            let root = Poly::constant(r.clone()).pow(q);
            if let Some(c) = root.as_constant() {
                return Ok(Number::Exact(c));
            }
        }
        let x = self.to_f64();
        let num = *q.numer();
        let den = *q.denom();
        let v = if x < 0.0 {
            if den % 2 == 0 {
                return Err(ExprError::Domain("even root of a negative value".into()));
            }
            let mag = (-x).powf(num as f64 / den as f64);
            if num % 2 == 0 {
                mag
            } else {
                -mag
            }
        } else {
            x.powf(num as f64 / den as f64)
        };
        Ok(Number::Float(v))
    }

    fn exp(&self) -> Number {
        if self.is_exact_zero() {
            return Number::int(1);
        }
        Number::Float(self.to_f64().exp())
    }
}

/// Values for variables, jet coordinates included.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvaluationPoint {
    values: BTreeMap<Var, Number>,
}

impl EvaluationPoint {
    pub fn new() -> Self {
        EvaluationPoint::default()
    }

    pub fn set(&mut self, v: impl Into<Var>, value: Number) {
        self.values.insert(v.into(), value);
    }

    pub fn set_f64(&mut self, v: impl Into<Var>, value: f64) {
        self.set(v, Number::Float(value));
    }

    pub fn set_rational(&mut self, v: impl Into<Var>, value: BigRational) {
        self.set(v, Number::Exact(value));
    }

    pub fn get(&self, v: &Var) -> Option<&Number> {
        self.values.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Number)> {
        self.values.iter()
    }
}

/// How a rational coefficient enters the computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// Stay exact as long as every operation allows it.
    Exact,
    /// Convert coefficients to `f64` up front.
    Float,
}

fn lift(c: &BigRational, mode: EvalMode) -> Number {
    match mode {
        EvalMode::Exact => Number::Exact(c.clone()),
        EvalMode::Float => Number::Float(c.to_f64().unwrap_or(f64::NAN)),
    }
}

fn lookup(v: &Var, point: &EvaluationPoint, mode: EvalMode) -> Result<Number, ExprError> {
    match point.get(v) {
        Some(Number::Exact(r)) if mode == EvalMode::Float => Ok(lift(r, mode)),
        Some(n) => Ok(n.clone()),
        None => Err(ExprError::Unbound(v.clone())),
    }
}

fn finite(n: Number) -> Result<Number, ExprError> {
    match n {
        Number::Float(x) if !x.is_finite() => Err(ExprError::Domain("non-finite intermediate value".into())),
        n => Ok(n),
    }
}

impl Poly {
    pub fn eval(&self, point: &EvaluationPoint, mode: EvalMode) -> Result<Number, ExprError> {
        let mut total = Number::int(0);
        for (m, c) in self.terms() {
            let mut t = lift(c, mode);
            for (a, e) in m.factors() {
                let base = match a {
                    Atom::Var(v) => lookup(v, point, mode)?.pow(*e)?,
                    Atom::Pow(p) => p.eval(point, mode)?.pow(*e)?,
                    Atom::Exp(arg) => {
                        let x = arg.eval(point, mode)?;
                        let scaled = x.mul(&Number::Exact(exponent_to_big(*e)));
                        finite(scaled.exp())?
                    }
                };
                t = finite(t.mul(&base))?;
                if t.is_exact_zero() {
                    break;
                }
            }
            total = finite(total.add(&t))?;
        }
        Ok(total)
    }

    pub fn eval_f64(&self, point: &EvaluationPoint) -> Result<f64, ExprError> {
        Ok(self.eval(point, EvalMode::Float)?.to_f64())
    }

    /// Largest absolute term value, a natural scale for residuals.
    pub fn term_scale(&self, point: &EvaluationPoint) -> Result<f64, ExprError> {
        let mut scale = 0.0f64;
        for (m, c) in self.terms() {
            let t = Poly::term(c.clone(), m.clone());
            scale = scale.max(t.eval(point, EvalMode::Float)?.to_f64().abs());
        }
        Ok(scale)
    }
}

impl Expr {
    /// Evaluates the tree directly, without normalizing first.
    pub fn eval(&self, point: &EvaluationPoint, mode: EvalMode) -> Result<Number, ExprError> {
        let n = match self {
            Expr::Rational(r) => lift(r, mode),
            Expr::Symbol(s) => lookup(&Var::Sym(s.clone()), point, mode)?,
            Expr::Jet(j) => lookup(&Var::Jet(j.clone()), point, mode)?,
            Expr::Sum(v) => {
                let mut acc = Number::int(0);
                for e in v {
                    acc = acc.add(&e.eval(point, mode)?);
                }
                acc
            }
            Expr::Product(v) => {
                let mut acc = Number::int(1);
                for e in v {
                    acc = acc.mul(&e.eval(point, mode)?);
                }
                acc
            }
            Expr::Power(b, q) => b.eval(point, mode)?.pow(*q)?,
            Expr::Exp(a) => a.eval(point, mode)?.exp(),
        };
        finite(n)
    }
}

/// Relative difference with an absolute floor of one.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
