use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::poly::{Atom, Exponent, Monomial, Poly};
use super::symbol::{JetCoordinate, Symbol, Var};

/// Expression tree as written by a user or produced by the printer.
///
/// Trees are not canonical; [`Expr::normalize`] maps them to a canonical
/// tree through [`Poly`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Rational(BigRational),
    Symbol(Symbol),
    Jet(JetCoordinate),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Box<Expr>, Exponent),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::Rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn sym(name: &str) -> Expr {
        Expr::Symbol(Symbol::new(name))
    }

    pub fn jet(dependent: &str, index: &[&str]) -> Expr {
        Expr::Jet(JetCoordinate::new(
            Symbol::new(dependent),
            index.iter().map(|s| Symbol::new(s)),
        ))
    }

    pub fn pow(self, q: Exponent) -> Expr {
        Expr::Power(Box::new(self), q)
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn to_poly(&self) -> Poly {
        match self {
            Expr::Rational(r) => Poly::constant(r.clone()),
            Expr::Symbol(s) => Poly::var(s.clone()),
            Expr::Jet(j) => Poly::jet(j.clone()),
            Expr::Sum(v) => v.iter().fold(Poly::zero(), |acc, e| acc + e.to_poly()),
            Expr::Product(v) => v.iter().fold(Poly::one(), |acc, e| acc.mul(&e.to_poly())),
            Expr::Power(b, q) => b.to_poly().pow(*q),
            Expr::Exp(a) => Poly::exp(a.to_poly()),
        }
    }

    /// Canonical representative of the expression.
    pub fn normalize(&self) -> Expr {
        self.to_poly().to_expr()
    }

    /// Count of nodes, used to bound generated inputs.
    pub fn size(&self) -> usize {
        match self {
            Expr::Rational(_) | Expr::Symbol(_) | Expr::Jet(_) => 1,
            Expr::Sum(v) | Expr::Product(v) => 1 + v.iter().map(Expr::size).sum::<usize>(),
            Expr::Power(b, _) => 1 + b.size(),
            Expr::Exp(a) => 1 + a.size(),
        }
    }
}

fn var_expr(v: &Var) -> Expr {
    match v {
        Var::Sym(s) => Expr::Symbol(s.clone()),
        Var::Jet(j) => Expr::Jet(j.clone()),
    }
}

fn monomial_expr(c: &BigRational, m: &Monomial) -> Expr {
    let mut factors = Vec::new();
    if !c.is_one() || m.is_one() {
        factors.push(Expr::Rational(c.clone()));
    }
    for (a, e) in m.factors() {
        let base = match a {
            Atom::Var(v) => var_expr(v),
            Atom::Pow(p) => p.to_expr(),
            Atom::Exp(arg) => Expr::Exp(Box::new(arg.to_expr())),
        };
        if e.is_one() {
            factors.push(base);
        } else {
            factors.push(Expr::Power(Box::new(base), *e));
        }
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::Product(factors)
    }
}

impl Poly {
    pub fn to_expr(&self) -> Expr {
        let mut terms: Vec<Expr> = self.terms().map(|(m, c)| monomial_expr(c, m)).collect();
        match terms.len() {
            0 => Expr::int(0),
            1 => terms.pop().unwrap(),
            _ => Expr::Sum(terms),
        }
    }
}

impl From<&Poly> for Expr {
    fn from(p: &Poly) -> Expr {
        p.to_expr()
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sum(vec![self, -rhs])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Product(vec![self, rhs])
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Product(vec![self, rhs.pow(-Exponent::one())])
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Product(vec![Expr::int(-1), self])
    }
}

/// The positive counterpart of a term with a negative leading coefficient.
fn negated(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Rational(r) if r.is_negative() => Some(Expr::Rational(-r)),
        Expr::Product(v) => match v.first() {
            Some(Expr::Rational(r)) if r.is_negative() => {
                let mut rest: Vec<Expr> = v[1..].to_vec();
                if !(-r).is_one() {
                    rest.insert(0, Expr::Rational(-r));
                }
                match rest.len() {
                    0 => Some(Expr::int(1)),
                    1 => rest.pop(),
                    _ => Some(Expr::Product(rest)),
                }
            }
            _ => None,
        },
        _ => None,
    }
}

#[derive(Clone, Copy, PartialEq, PartialOrd)]
enum Prec {
    Sum,
    Product,
    Atom,
}

fn fmt_prec(e: &Expr, f: &mut fmt::Formatter<'_>, ctx: Prec) -> fmt::Result {
    match e {
        Expr::Rational(r) => {
            let simple = r.is_integer() && !r.is_negative();
            if simple || ctx == Prec::Sum {
                write!(f, "{r}")
            } else {
                write!(f, "({r})")
            }
        }
        Expr::Symbol(s) => write!(f, "{s}"),
        Expr::Jet(j) => write!(f, "{j}"),
        Expr::Sum(v) => {
            if v.is_empty() {
                return f.write_str("0");
            }
            if ctx > Prec::Sum {
                f.write_str("(")?;
            }
            for (i, t) in v.iter().enumerate() {
                match (i, negated(t)) {
                    (0, Some(p)) => {
                        f.write_str("-")?;
                        fmt_prec(&p, f, Prec::Product)?;
                    }
                    (0, None) => fmt_prec(t, f, Prec::Product)?,
                    (_, Some(p)) => {
                        f.write_str(" - ")?;
                        fmt_prec(&p, f, Prec::Product)?;
                    }
                    (_, None) => {
                        f.write_str(" + ")?;
                        fmt_prec(t, f, Prec::Product)?;
                    }
                }
            }
            if ctx > Prec::Sum {
                f.write_str(")")?;
            }
            Ok(())
        }
        Expr::Product(v) => {
            if v.is_empty() {
                return f.write_str("1");
            }
            if ctx > Prec::Product {
                f.write_str("(")?;
            }
            for (i, t) in v.iter().enumerate() {
                if i > 0 {
                    f.write_str("*")?;
                }
                fmt_prec(t, f, Prec::Product)?;
            }
            if ctx > Prec::Product {
                f.write_str(")")?;
            }
            Ok(())
        }
        Expr::Power(b, q) => {
            if matches!(**b, Expr::Power(..)) {
                f.write_str("(")?;
                fmt_prec(b, f, Prec::Atom)?;
                f.write_str(")")?;
            } else {
                fmt_prec(b, f, Prec::Atom)?;
            }
            if q.is_integer() && !q.is_negative() {
                write!(f, "^{}", q.numer())
            } else {
                write!(f, "^({q})")
            }
        }
        Expr::Exp(a) => {
            f.write_str("exp(")?;
            fmt_prec(a, f, Prec::Sum)?;
            f.write_str(")")
        }
    }
}

/// Prints in the input language; the output parses back to an expression
/// with the same normal form.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, f, Prec::Sum)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}
