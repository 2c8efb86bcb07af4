use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, Zero};

use super::symbol::{JetCoordinate, Symbol, Var};
use super::ExprError;

/// Exponents are small rationals; every power in the supported grammar fits.
pub type Exponent = Rational64;

pub(crate) fn exponent_to_big(e: Exponent) -> BigRational {
    BigRational::new(BigInt::from(*e.numer()), BigInt::from(*e.denom()))
}

/// A factor of a monomial.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Var(Var),
    /// A base that does not split into a monomial: a sum of two or more
    /// terms, or a rational constant whose root is irrational.
    Pow(Arc<Poly>),
    /// `exp` of a nonzero argument; always carries exponent 1.
    Exp(Arc<Poly>),
}

impl Atom {
    fn any_var(&self, pred: &dyn Fn(&Var) -> bool) -> bool {
        match self {
            Atom::Var(v) => pred(v),
            Atom::Pow(p) | Atom::Exp(p) => p.any_var(pred),
        }
    }
}

/// Product of atoms raised to nonzero rational exponents, sorted by atom.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Atom, Exponent)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: Var, e: Exponent) -> Self {
        if e.is_zero() {
            Monomial::one()
        } else {
            Monomial(vec![(Atom::Var(v), e)])
        }
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, Exponent)] {
        &self.0
    }

    /// Exponent of a plain variable (zero when absent).
    pub fn exponent_of(&self, v: &Var) -> Exponent {
        self.0
            .iter()
            .find_map(|(a, e)| match a {
                Atom::Var(w) if w == v => Some(*e),
                _ => None,
            })
            .unwrap_or_else(Exponent::zero)
    }

    /// Total degree over plain variables.
    pub fn degree(&self) -> Exponent {
        self.0
            .iter()
            .filter(|(a, _)| matches!(a, Atom::Var(_)))
            .map(|(_, e)| *e)
            .sum()
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        self.0.iter().any(|(a, _)| a.any_var(&|w| w == v))
    }

    /// The reciprocal monomial. `exp` arguments are negated.
    pub fn inverse(&self) -> Poly {
        let raw = self
            .0
            .iter()
            .map(|(a, e)| match a {
                Atom::Exp(arg) => (Atom::Exp(Arc::new(-&**arg)), *e),
                _ => (a.clone(), -*e),
            })
            .collect();
        settle(BigRational::one(), raw)
    }

    pub fn to_poly(&self) -> Poly {
        Poly::term(BigRational::one(), self.clone())
    }
}

/// Expanded rational normal form: a sum of monomials with exact rational
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigRational>,
}

fn merge(a: &[(Atom, Exponent)], b: &[(Atom, Exponent)]) -> (Vec<(Atom, Exponent)>, bool) {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut special = false;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let e = a[i].1 + b[j].1;
                if !matches!(a[i].0, Atom::Var(_)) {
                    special = true;
                }
                if !e.is_zero() {
                    out.push((a[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    if out.iter().filter(|(a, _)| matches!(a, Atom::Exp(_))).count() > 1 {
        special = true;
    }
    (out, special)
}

/// Trial-division factorization of a positive integer. A cofactor that
/// survives the search bound is returned as if it were prime.
fn factor(n: &BigInt) -> Vec<(BigInt, i64)> {
    let mut out = Vec::new();
    let mut n = n.clone();
    let mut p = BigInt::from(2u32);
    let bound = BigInt::from(100_000u32);
    while p <= bound && &p * &p <= n {
        let mut k = 0;
        while (&n % &p).is_zero() {
            n /= &p;
            k += 1;
        }
        if k > 0 {
            out.push((p.clone(), k));
        }
        p += 1u32;
    }
    if n > BigInt::one() {
        out.push((n, 1));
    }
    out
}

fn const_atom(c: BigInt) -> Atom {
    Atom::Pow(Arc::new(Poly::constant(BigRational::from_integer(c))))
}

/// Accumulates constant powers as prime powers so that every radical of a
/// rational has one representation: a rational coefficient times primes
/// raised to exponents in (0, 1).
#[derive(Default)]
struct Radicals(BTreeMap<BigInt, Exponent>);

impl Radicals {
    fn push(&mut self, c: &BigRational, e: Exponent, coeff: &mut BigRational) {
        if e.is_integer() {
            *coeff *= c.pow(e.to_integer() as i32);
            return;
        }
        let mag = if c.is_negative() {
            if e.denom() % 2 == 1 {
                if e.numer() % 2 != 0 {
                    *coeff = -coeff.clone();
                }
            } else {
                *self.0.entry(BigInt::from(-1)).or_insert_with(Exponent::zero) += e;
            }
            -c
        } else {
            c.clone()
        };
        for (p, k) in factor(mag.numer()) {
            *self.0.entry(p).or_insert_with(Exponent::zero) += e * k;
        }
        for (p, k) in factor(mag.denom()) {
            *self.0.entry(p).or_insert_with(Exponent::zero) -= e * k;
        }
    }

    fn finish(self, coeff: &mut BigRational, kept: &mut Vec<(Atom, Exponent)>) {
        for (p, f) in self.0 {
            let n = f.floor();
            let mut rest = f - n;
            let base = BigRational::from_integer(p.clone());
            *coeff *= base.pow(n.to_integer() as i32);
            if p == BigInt::from(-1) && rest.denom() % 2 == 1 {
                if rest.numer() % 2 != 0 {
                    *coeff = -coeff.clone();
                }
                rest = Exponent::zero();
            }
            if !rest.is_zero() {
                kept.push((const_atom(p), rest));
            }
        }
    }
}

/// Bring an arbitrary list of factors into normal form.
fn settle(mut coeff: BigRational, raw: Vec<(Atom, Exponent)>) -> Poly {
    if coeff.is_zero() {
        return Poly::zero();
    }
    let mut radicals = Radicals::default();
    let mut exp_arg = Poly::zero();
    let mut pending: Vec<(Atom, Exponent)> = Vec::with_capacity(raw.len());
    let mut extra = Vec::new();
    for (a, e) in raw {
        if e.is_zero() {
            continue;
        }
        match a {
            Atom::Var(_) => pending.push((a, e)),
            Atom::Exp(arg) => exp_arg.add_assign(&arg.scale(&exponent_to_big(e))),
            Atom::Pow(base) => match base.as_constant() {
                Some(c) if c.is_zero() => {
                    if e > Exponent::zero() {
                        return Poly::zero();
                    }
                    pending.push((Atom::Pow(base), e));
                }
                Some(c) => radicals.push(&c, e, &mut coeff),
                None if base.len() == 1 => extra.push(base.pow(e)),
                None => {
                    let (content, prim) = base.power_content(e);
                    radicals.push(&content, e, &mut coeff);
                    pending.push((Atom::Pow(Arc::new(prim)), e));
                }
            },
        }
    }
    pending.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(Atom, Exponent)> = Vec::with_capacity(pending.len());
    for (a, e) in pending {
        match merged.last_mut() {
            Some((last, le)) if *last == a => *le += e,
            _ => merged.push((a, e)),
        }
    }
    let mut kept = Vec::with_capacity(merged.len());
    for (a, e) in merged {
        if e.is_zero() {
            continue;
        }
        match &a {
            Atom::Pow(base) if e.is_integer() && e > Exponent::zero() && base.as_constant().is_none() => {
                extra.push(base.pow_int(e.to_integer() as u32));
            }
            _ => kept.push((a, e)),
        }
    }
    radicals.finish(&mut coeff, &mut kept);
    if !exp_arg.is_zero() {
        kept.push((Atom::Exp(Arc::new(exp_arg)), Exponent::one()));
    }
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    let mut result = Poly::term(coeff, Monomial(kept));
    for p in extra {
        result = result.mul(&p);
    }
    result
}

/// `c^q` for a rational constant, exact whenever the root is rational.
fn coeff_pow(c: &BigRational, q: Exponent) -> Poly {
    settle(
        BigRational::one(),
        vec![(Atom::Pow(Arc::new(Poly::constant(c.clone()))), q)],
    )
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Poly::term(c, Monomial::one())
    }

    pub fn int(n: i64) -> Self {
        Poly::constant(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(n: i64, d: i64) -> Self {
        Poly::constant(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn term(c: BigRational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn var(v: impl Into<Var>) -> Self {
        Poly::term(BigRational::one(), Monomial::var(v.into(), Exponent::one()))
    }

    pub fn sym(name: &str) -> Self {
        Poly::var(Symbol::new(name))
    }

    pub fn jet(j: JetCoordinate) -> Self {
        Poly::var(Var::Jet(j))
    }

    /// `exp(arg)`, with `exp(0) = 1`.
    pub fn exp(arg: Poly) -> Self {
        if arg.is_zero() {
            return Poly::one();
        }
        Poly::term(
            BigRational::one(),
            Monomial(vec![(Atom::Exp(Arc::new(arg)), Exponent::one())]),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    /// The value if this is a rational constant (zero included).
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn as_single_term(&self) -> Option<(&Monomial, &BigRational)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    fn add_term(&mut self, m: Monomial, c: BigRational) {
        use std::collections::btree_map::Entry;
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &Poly) {
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let c = c1 * c2;
                if m2.is_one() {
                    out.add_term(m1.clone(), c);
                    continue;
                }
                if m1.is_one() {
                    out.add_term(m2.clone(), c);
                    continue;
                }
                let (raw, special) = merge(&m1.0, &m2.0);
                if special {
                    let p = settle(c, raw);
                    for (m, c) in p.terms {
                        out.add_term(m, c);
                    }
                } else {
                    out.add_term(Monomial(raw), c);
                }
            }
        }
        out
    }

    pub(crate) fn pow_int(&self, n: u32) -> Poly {
        let mut result = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                result = result.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Raise to a rational power.
    ///
    /// Single-term bases distribute the exponent over their factors; sums
    /// are expanded for positive integer exponents and kept as a power atom
    /// otherwise. `0^q` with `q < 0` stays an atom so that the operation is
    /// total; evaluating it reports a division by zero.
    pub fn pow(&self, q: Exponent) -> Poly {
        if q.is_zero() {
            return Poly::one();
        }
        if self.is_zero() {
            return coeff_pow(&BigRational::zero(), q);
        }
        if let Some((m, c)) = self.as_single_term() {
            let mut raw = Vec::with_capacity(m.0.len());
            for (a, e) in &m.0 {
                match a {
                    Atom::Exp(arg) => raw.push((
                        Atom::Exp(Arc::new(arg.scale(&exponent_to_big(q * *e)))),
                        Exponent::one(),
                    )),
                    _ => raw.push((a.clone(), *e * q)),
                }
            }
            return coeff_pow(c, q).mul(&settle(BigRational::one(), raw));
        }
        if q.is_integer() && q > Exponent::zero() {
            return self.pow_int(q.to_integer() as u32);
        }
        settle(BigRational::one(), vec![(Atom::Pow(Arc::new(self.clone())), q)])
    }

    /// Content to pull out of a power base: always the positive rational
    /// content, and the sign too when `q` has an odd denominator.
    fn power_content(&self, q: Exponent) -> (BigRational, Poly) {
        let (content, prim) = self.primitive_part();
        if content.is_negative() && q.denom() % 2 == 0 {
            (-content, -&prim)
        } else {
            (content, prim)
        }
    }

    /// Split into `content * primitive`, where the primitive part has coprime
    /// integer coefficients and a positive leading coefficient.
    pub fn primitive_part(&self) -> (BigRational, Poly) {
        let mut g = BigInt::zero();
        let mut l = BigInt::one();
        for c in self.terms.values() {
            g = g.gcd(c.numer());
            l = l.lcm(c.denom());
        }
        if g.is_zero() {
            return (BigRational::one(), self.clone());
        }
        let mut content = BigRational::new(g, l);
        if self.terms.values().next().is_some_and(|c| c.is_negative()) {
            content = -content;
        }
        let inv = content.recip();
        (content, self.scale(&inv))
    }

    pub fn any_var(&self, pred: &dyn Fn(&Var) -> bool) -> bool {
        self.terms.keys().any(|m| m.0.iter().any(|(a, _)| a.any_var(pred)))
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        self.any_var(&|w| w == v)
    }

    pub fn contains_symbol(&self, s: &Symbol) -> bool {
        self.any_var(&|w| matches!(w, Var::Sym(t) if t == s))
    }

    /// Every plain variable and jet coordinate, including those inside
    /// powers and exponentials.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                match a {
                    Atom::Var(v) => {
                        out.insert(v.clone());
                    }
                    Atom::Pow(p) | Atom::Exp(p) => p.collect_vars(out),
                }
            }
        }
    }

    pub fn jets(&self) -> BTreeSet<JetCoordinate> {
        self.vars()
            .into_iter()
            .filter_map(|v| match v {
                Var::Jet(j) => Some(j),
                Var::Sym(_) => None,
            })
            .collect()
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.vars()
            .into_iter()
            .filter_map(|v| match v {
                Var::Sym(s) => Some(s),
                Var::Jet(_) => None,
            })
            .collect()
    }

    /// Highest jet order present; `None` without jet coordinates.
    pub fn jet_order(&self) -> Option<usize> {
        self.jets().iter().map(JetCoordinate::order).max()
    }

    /// Partial derivative treating every other variable, jet coordinates
    /// included, as an independent constant.
    pub fn diff(&self, v: &Var) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (i, (a, e)) in m.0.iter().enumerate() {
                let d = match a {
                    Atom::Var(w) => {
                        if w != v {
                            continue;
                        }
                        Poly::term(exponent_to_big(*e), Monomial::var(w.clone(), *e - Exponent::one()))
                    }
                    Atom::Pow(base) => {
                        if !base.contains_var(v) {
                            continue;
                        }
                        let db = base.diff(v);
                        base.pow(*e - Exponent::one()).scale(&exponent_to_big(*e)).mul(&db)
                    }
                    Atom::Exp(arg) => {
                        if !arg.contains_var(v) {
                            continue;
                        }
                        Poly::exp((**arg).clone()).mul(&arg.diff(v))
                    }
                };
                if d.is_zero() {
                    continue;
                }
                let mut rest = m.0.clone();
                rest.remove(i);
                let t = Poly::term(c.clone(), Monomial(rest)).mul(&d);
                out.add_assign(&t);
            }
        }
        out
    }

    pub fn diff_sym(&self, s: &Symbol) -> Poly {
        self.diff(&Var::Sym(s.clone()))
    }

    /// Simultaneous replacement of variables, followed by normalization.
    pub fn substitute(&self, map: &BTreeMap<Var, Poly>) -> Poly {
        if map.is_empty() {
            return self.clone();
        }
        let hit = |w: &Var| map.contains_key(w);
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut kept = Vec::new();
            let mut factors = Vec::new();
            for (a, e) in &m.0 {
                match a {
                    Atom::Var(w) => match map.get(w) {
                        Some(r) => factors.push(r.pow(*e)),
                        None => kept.push((a.clone(), *e)),
                    },
                    Atom::Pow(base) => {
                        if base.any_var(&hit) {
                            factors.push(base.substitute(map).pow(*e));
                        } else {
                            kept.push((a.clone(), *e));
                        }
                    }
                    Atom::Exp(arg) => {
                        if arg.any_var(&hit) {
                            factors.push(Poly::exp(arg.substitute(map)));
                        } else {
                            kept.push((a.clone(), *e));
                        }
                    }
                }
            }
            let mut t = Poly::term(c.clone(), Monomial(kept));
            for f in factors {
                if t.is_zero() {
                    break;
                }
                t = t.mul(&f);
            }
            out.add_assign(&t);
        }
        out
    }

    /// Group terms by their monomial in `vars`.
    ///
    /// Fails when a member of `vars` carries a negative or fractional
    /// exponent, or hides inside a power or exponential.
    pub fn collect(&self, vars: &BTreeSet<Var>) -> Result<BTreeMap<Monomial, Poly>, ExprError> {
        let mut out: BTreeMap<Monomial, Poly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut key = Vec::new();
            let mut rest = Vec::new();
            for (a, e) in &m.0 {
                match a {
                    Atom::Var(w) if vars.contains(w) => {
                        if !e.is_integer() || *e < Exponent::zero() {
                            return Err(ExprError::NotPolynomial(w.clone()));
                        }
                        key.push((a.clone(), *e));
                    }
                    _ => {
                        if let Some(w) = vars.iter().find(|w| a.any_var(&|x| x == *w)) {
                            return Err(ExprError::NotPolynomial(w.clone()));
                        }
                        rest.push((a.clone(), *e));
                    }
                }
            }
            out.entry(Monomial(key))
                .or_default()
                .add_term(Monomial(rest), c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        Ok(out)
    }

    /// Coefficients of the powers of a single variable, keyed by degree.
    pub fn coefficients_in(&self, v: &Var) -> Result<BTreeMap<u32, Poly>, ExprError> {
        let vars = BTreeSet::from([v.clone()]);
        Ok(self
            .collect(&vars)?
            .into_iter()
            .map(|(m, p)| (m.exponent_of(v).to_integer() as u32, p))
            .collect())
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Sub for Poly {
    type Output = Poly;
    fn sub(self, rhs: Poly) -> Poly {
        &self - &rhs
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        Poly::mul(self, rhs)
    }
}

fn fmt_exponent(f: &mut fmt::Formatter<'_>, e: Exponent) -> fmt::Result {
    if e.is_integer() && e > Exponent::zero() {
        write!(f, "^{}", e.numer())
    } else {
        write!(f, "^({e})")
    }
}

fn fmt_rational_base(f: &mut fmt::Formatter<'_>, c: &BigRational) -> fmt::Result {
    if c.is_integer() && !c.is_negative() {
        write!(f, "{c}")
    } else {
        write!(f, "({c})")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for (i, (a, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            match a {
                Atom::Var(v) => write!(f, "{v}")?,
                Atom::Pow(base) => match base.as_constant() {
                    Some(c) => fmt_rational_base(f, &c)?,
                    None => write!(f, "({base})")?,
                },
                Atom::Exp(arg) => write!(f, "exp({arg})")?,
            }
            if *e != Exponent::one() {
                fmt_exponent(f, *e)?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let a = c.abs();
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Var(v) => write!(f, "{v}"),
            Atom::Pow(p) => write!(f, "({p})"),
            Atom::Exp(p) => write!(f, "exp({p})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly {
        Poly::sym("x")
    }
    fn y() -> Poly {
        Poly::sym("y")
    }
    fn q(n: i64, d: i64) -> Exponent {
        Exponent::new(n, d)
    }

    #[test]
    fn difference_of_squares() {
        let e = (&x() + &y()).mul(&(&x() - &y()));
        let expect = &x().pow(q(2, 1)) - &y().pow(q(2, 1));
        assert_eq!(e, expect);
        assert_eq!(e.to_string(), "x^2 - y^2");
    }

    #[test]
    fn exponents_add() {
        let u = Poly::sym("u");
        assert_eq!(u.mul(&u.pow(q(4, 1))), u.pow(q(5, 1)));
        assert_eq!(u.pow(q(1, 2)).mul(&u.pow(q(1, 2))), u);
        assert!(u.pow(q(1, 2)).mul(&u.pow(q(-1, 2))) == Poly::one());
    }

    #[test]
    fn radicals_of_constants() {
        assert_eq!(Poly::int(4).pow(q(1, 2)), Poly::int(2));
        assert_eq!(Poly::int(-8).pow(q(1, 3)), Poly::int(-2));
        let r2 = Poly::int(2).pow(q(1, 2));
        assert!(r2.as_constant().is_none());
        assert_eq!(r2.mul(&r2), Poly::int(2));
        assert_eq!(r2.to_string(), "2^(1/2)");
    }

    #[test]
    fn radicals_have_one_representation() {
        let six = Poly::int(6).pow(q(-1, 2));
        let split = Poly::int(2).pow(q(-1, 2)).mul(&Poly::int(3).pow(q(-1, 2)));
        assert_eq!(six, split);
        let half = Poly::rational(1, 2).pow(q(1, 2));
        assert_eq!(
            half,
            Poly::int(2).pow(q(1, 2)).scale(&BigRational::new(1.into(), 2.into()))
        );
        assert_eq!(
            Poly::int(2).pow(q(3, 2)),
            Poly::int(2).pow(q(1, 2)).scale(&BigRational::from_integer(2.into()))
        );
        assert_eq!(Poly::int(12).pow(q(1, 2)).mul(&Poly::int(3).pow(q(1, 2))), Poly::int(6));
    }

    #[test]
    fn sum_powers_share_atoms() {
        let s = &x() + &y();
        let a = s.pow(q(-1, 2));
        assert_eq!(a.mul(&a), s.pow(q(-1, 1)));
        let twice = s.scale(&BigRational::from_integer(2.into()));
        // content is pulled out for integer exponents
        assert_eq!(
            twice.pow(q(-1, 1)),
            s.pow(q(-1, 1)).scale(&BigRational::new(1.into(), 2.into()))
        );
        assert_eq!(a.mul(&a).mul(&s), (&x() * &s.pow(q(-1, 1))) + (&y() * &s.pow(q(-1, 1))));
    }

    #[test]
    fn exponentials_merge() {
        let a = Poly::exp(x());
        let b = Poly::exp(-&x());
        assert_eq!(a.mul(&b), Poly::one());
        assert_eq!(a.mul(&a), Poly::exp(x().scale(&BigRational::from_integer(2.into()))));
        assert_eq!(
            a.pow(q(1, 2)),
            Poly::exp(x().scale(&BigRational::new(1.into(), 2.into())))
        );
    }

    #[test]
    fn partial_derivatives() {
        let t = Poly::sym("t");
        let e = x().pow(q(2, 1)).mul(&t);
        assert_eq!(
            e.diff_sym(&"x".into()),
            x().mul(&t).scale(&BigRational::from_integer(2.into()))
        );
        let ux = Poly::jet(JetCoordinate::new("u".into(), ["x".into()]));
        assert!(ux.diff_sym(&"x".into()).is_zero());
        let b3 = Poly::sym("b3");
        let d = Poly::sym("delta");
        let e = Poly::exp(-&b3.mul(&d));
        assert_eq!(e.diff_sym(&"delta".into()), (-&b3).mul(&e));
    }

    #[test]
    fn substitution_is_simultaneous() {
        let map = BTreeMap::from([(Var::sym("x"), y()), (Var::sym("y"), x())]);
        assert_eq!((&x() - &y()).substitute(&map), &y() - &x());
        let map = BTreeMap::from([(Var::sym("x"), y())]);
        assert_eq!(
            (&x() + &y()).substitute(&map),
            y().scale(&BigRational::from_integer(2.into()))
        );
    }

    #[test]
    fn substitution_collapses_power_bases() {
        // (a*d + c)^(-1/2) with d = (s - c)/a becomes s^(-1/2)
        let (a, c, s) = (Poly::sym("a"), Poly::sym("c"), Poly::sym("s"));
        let d = Poly::sym("d");
        let e = (&a.mul(&d) + &c).pow(q(-1, 2));
        let inv = (&s - &c).mul(&a.pow(q(-1, 1)));
        let out = e.substitute(&BTreeMap::from([(Var::sym("d"), inv)]));
        assert_eq!(out, s.pow(q(-1, 2)));
    }

    #[test]
    fn collect_examples() {
        let ux = Poly::jet(JetCoordinate::new("u".into(), ["x".into()]));
        let ut = Poly::jet(JetCoordinate::new("u".into(), ["t".into()]));
        let (a, b) = (Poly::sym("a"), Poly::sym("b"));
        let e = &(&a.mul(&ux.pow(q(2, 1))) + &b.mul(&ux)) + &a;
        let vars = BTreeSet::from([Var::Jet(JetCoordinate::new("u".into(), ["x".into()]))]);
        let c = e.collect(&vars).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[&Monomial::one()], a);
        let e2 = x().mul(&ux).mul(&ut);
        let c2 = e2.collect(&vars).unwrap();
        assert_eq!(c2.len(), 1);
        assert_eq!(c2.values().next().unwrap(), &x().mul(&ut));
        assert!(ux.pow(q(-1, 1)).collect(&vars).is_err());
    }

    #[test]
    fn zero_to_negative_power_is_kept_symbolic() {
        let z = Poly::zero().pow(q(-1, 1));
        assert!(!z.is_zero());
        assert_eq!(Poly::zero().pow(q(2, 1)), Poly::zero());
    }
}
