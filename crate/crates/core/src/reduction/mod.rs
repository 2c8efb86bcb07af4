//! Similarity reductions by explicit change of variables.

mod change;
mod compare;

pub use change::ChangeOfVariables;
pub use compare::{align_with_reference, equations_proportional, Alignment, Proportionality};

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{chain_derivative, Atom, EvaluationPoint, JetCoordinate, Monomial, Poly, Symbol, Var};
use crate::parser::Settings;
use crate::sampling;

/// The equation after a change of variables, split as `factor * expression`.
#[derive(Clone, Debug)]
pub struct ReducedEquation {
    pub expression: Poly,
    /// Monomial in the spectator coordinates pulled out of every term.
    pub factor: Poly,
    /// Whether `expression` is free of every spectator coordinate.
    pub fiber_free: bool,
    pub function: Symbol,
    pub variables: Vec<Symbol>,
}

impl ReducedEquation {
    pub fn order(&self) -> usize {
        self.expression.jet_order().unwrap_or(0)
    }
}

/// Every jet `u_J` occurring in `delta`, written through the new function.
fn dependent_jets(delta: &Poly, cov: &ChangeOfVariables, order: usize) -> Result<BTreeMap<Var, Poly>> {
    let mut memo: BTreeMap<JetCoordinate, Poly> = BTreeMap::new();
    let partials: BTreeMap<Symbol, Vec<(Symbol, Poly)>> = cov
        .old_vars
        .iter()
        .map(|v| (v.clone(), cov.inner_partials(v)))
        .collect();
    let base = JetCoordinate::base(cov.old_dependent.clone());
    memo.insert(base, cov.dependent_value());
    let mut wanted: Vec<JetCoordinate> = delta
        .jets()
        .into_iter()
        .filter(|j| j.dependent() == &cov.old_dependent)
        .collect();
    wanted.sort_by_key(JetCoordinate::order);
    for j in &wanted {
        let mut chain = Vec::new();
        let mut cur = j.clone();
        while !memo.contains_key(&cur) {
            let last = cur.index().last().expect("base is memoized").clone();
            chain.push(last.clone());
            cur = cur.reduce(&last).expect("index contains last");
        }
        while let Some(v) = chain.pop() {
            let inner = partials
                .get(&v)
                .ok_or_else(|| Error::Input(format!("{v} is not a variable of the equation being reduced")))?;
            let next = cur.extend(&v);
            let d = chain_derivative(&memo[&cur], &v, &cov.function, inner, order)?;
            memo.insert(next.clone(), d);
            cur = next;
        }
    }
    Ok(wanted
        .into_iter()
        .map(|j| {
            let p = memo[&j].clone();
            (Var::Jet(j), p)
        })
        .collect())
}

fn spectator_part(arg: &Poly, spectators: &BTreeSet<Var>) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in arg.terms() {
        let t = Poly::term(c.clone(), m.clone());
        if t.any_var(&|v| spectators.contains(v)) {
            out.add_assign(&t);
        }
    }
    out
}

/// Splits off the largest monomial in the spectator coordinates dividing
/// every term, together with the spectator part of the first exponential.
fn extract_factor(e: &Poly, spectators: &BTreeSet<Var>) -> (Poly, Poly) {
    if e.is_zero() {
        return (Poly::one(), Poly::zero());
    }
    let mut min_exp: BTreeMap<Var, crate::expr::Exponent> = BTreeMap::new();
    for (k, (m, _)) in e.terms().enumerate() {
        for s in spectators {
            let x = m.exponent_of(s);
            let entry = min_exp.entry(s.clone()).or_insert(x);
            if k > 0 && x < *entry {
                *entry = x;
            }
        }
    }
    let mut factor = Poly::one();
    for (s, x) in &min_exp {
        if *x != crate::expr::Exponent::from_integer(0) {
            factor = factor.mul(&Poly::term(
                BigRational::from_integer(BigInt::from(1)),
                Monomial::var(s.clone(), *x),
            ));
        }
    }
    let (first, _) = e.terms().next().expect("non-zero");
    for (a, _) in first.factors() {
        if let Atom::Exp(arg) = a {
            let part = spectator_part(arg, spectators);
            if !part.is_zero() {
                factor = factor.mul(&Poly::exp(part));
            }
        }
    }
    let (fm, _) = factor.as_single_term().expect("factor is a monomial");
    let quotient = e.mul(&fm.inverse());
    (factor, quotient)
}

/// Rewrites `delta` through the change of variables and splits off the
/// common spectator factor.
pub fn apply_similarity(delta: &Poly, cov: &ChangeOfVariables) -> Result<ReducedEquation> {
    let delta = cov.lift(delta);
    let order = delta.jet_order().unwrap_or(0);
    let jets = dependent_jets(&delta, cov, order)?;
    let substituted = delta.substitute(&jets);
    let rewritten = substituted.substitute(&cov.inverse);
    let kept: BTreeSet<Symbol> = cov
        .spectators
        .iter()
        .filter(|(_, d)| d.is_none())
        .map(|(s, _)| s.clone())
        .collect();
    if let Some(v) = cov
        .old_vars
        .iter()
        .find(|v| !kept.contains(*v) && rewritten.contains_symbol(v))
    {
        return Err(Error::Input(format!(
            "the inverse map does not eliminate {v}; declare it as a spectator or invert it"
        )));
    }
    let spectators: BTreeSet<Var> = cov.spectators.iter().map(|(s, _)| Var::Sym(s.clone())).collect();
    let (factor, expression) = extract_factor(&rewritten, &spectators);
    let fiber_free = !expression.any_var(&|v| spectators.contains(v));
    Ok(ReducedEquation {
        expression,
        factor,
        fiber_free,
        function: cov.function.clone(),
        variables: cov.new_vars.clone(),
    })
}

/// A second change of variables applied to an already reduced equation.
pub fn second_stage_reduce(re: &ReducedEquation, cov2: &ChangeOfVariables) -> Result<ReducedEquation> {
    if cov2.old_dependent != re.function || cov2.old_vars != re.variables {
        return Err(Error::Input(format!(
            "second stage expects {}({}), found {}({})",
            cov2.old_dependent,
            join(&cov2.old_vars),
            re.function,
            join(&re.variables)
        )));
    }
    apply_similarity(&re.expression, cov2)
}

fn join(v: &[Symbol]) -> String {
    v.iter().map(Symbol::name).collect::<Vec<_>>().join(",")
}

/// Agreement between the equation evaluated on an explicit composite
/// function and `factor * expression` on the matching reduced jets.
#[derive(Clone, Debug, PartialEq)]
pub struct Consistency {
    pub points: usize,
    pub max_relative: f64,
    pub tolerance: f64,
    pub resampled: usize,
}

impl Consistency {
    pub fn passed(&self) -> bool {
        self.max_relative <= self.tolerance
    }
}

fn random_function(vars: &[Symbol], degree: u32, rng: &mut impl rand::Rng) -> Poly {
    let mut out = Poly::zero();
    let mut exps: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in vars {
        exps = exps
            .into_iter()
            .flat_map(|e| {
                let used: u32 = e.iter().sum();
                (0..=degree - used).map(move |k| {
                    let mut e = e.clone();
                    e.push(k);
                    e
                })
            })
            .collect();
    }
    let lo = BigRational::from_integer(BigInt::from(-1));
    let hi = BigRational::from_integer(BigInt::from(1));
    for e in exps {
        let c = sampling::rational_in(rng, &lo, &hi);
        let m = vars
            .iter()
            .zip(&e)
            .fold(Poly::one(), |acc, (v, &k)| acc.mul(&Poly::var(v.clone()).pow_int(k)));
        out.add_assign(&m.scale(&c));
    }
    out
}

fn partial(p: &Poly, index: &[Symbol]) -> Poly {
    index.iter().fold(p.clone(), |acc, v| acc.diff_sym(v))
}

/// Checks `delta(u = A*G(new(x))) = factor * expression` on a random
/// polynomial `G`, differentiating the composite directly rather than
/// through the chain rule.
pub fn check_consistency(
    delta: &Poly,
    cov: &ChangeOfVariables,
    re: &ReducedEquation,
    settings: &Settings,
    section: &str,
) -> Result<Consistency> {
    let delta = cov.lift(delta);
    let order = delta.jet_order().unwrap_or(0) as u32;
    let mut rng = sampling::stream(settings.seed, section);
    let g = random_function(&cov.new_vars, order + 1, &mut rng);
    let to_old: BTreeMap<Var, Poly> = cov
        .new_vars
        .iter()
        .zip(&cov.forward)
        .map(|(n, f)| (Var::Sym(n.clone()), f.clone()))
        .collect();
    let u = cov.prefactor.mul(&g.substitute(&to_old));
    let old_jets: Vec<(JetCoordinate, Poly)> = delta
        .jets()
        .into_iter()
        .filter(|j| j.dependent() == &cov.old_dependent)
        .map(|j| {
            let p = partial(&u, j.index());
            (j, p)
        })
        .collect();
    let new_jets: Vec<(JetCoordinate, Poly)> = re
        .expression
        .jets()
        .into_iter()
        .chain(re.factor.jets())
        .filter(|j| j.dependent() == &cov.function)
        .map(|j| {
            let p = partial(&g, j.index());
            (j, p)
        })
        .collect();
    let computed: BTreeSet<Symbol> = cov.new_vars.iter().chain(&cov.spectator_symbols()).cloned().collect();
    let mut symbols: BTreeSet<Symbol> = cov.old_vars.iter().cloned().collect();
    for p in [&delta, &cov.prefactor, &re.expression, &re.factor]
        .into_iter()
        .chain(&cov.forward)
        .chain(cov.spectators.iter().filter_map(|(_, d)| d.as_ref()))
    {
        symbols.extend(p.symbols());
    }
    let symbols: Vec<Symbol> = symbols
        .into_iter()
        .filter(|s| !computed.contains(s) || cov.old_vars.contains(s))
        .collect();

    let one_point = |p: &EvaluationPoint| -> Result<f64> {
        let mut old = p.clone();
        for (j, e) in &old_jets {
            old.set_f64(j.clone(), e.eval_f64(p)?);
        }
        let lhs = delta.eval_f64(&old)?;
        let scale = delta.term_scale(&old)?;
        let mut new = p.clone();
        for (s, v) in cov.forward_point(p)? {
            new.set_f64(s, v);
        }
        let mut g_point = EvaluationPoint::new();
        for (s, v) in cov
            .new_vars
            .iter()
            .map(|n| (n.clone(), new.get(&Var::Sym(n.clone())).cloned()))
        {
            g_point.set(s, v.expect("new variable value"));
        }
        for (j, e) in &new_jets {
            new.set_f64(j.clone(), e.eval_f64(&g_point)?);
        }
        let rhs = re.factor.eval_f64(&new)? * re.expression.eval_f64(&new)?;
        Ok((lhs - rhs).abs() / scale.max(lhs.abs()).max(f64::MIN_POSITIVE))
    };

    let mut values = Vec::with_capacity(settings.points);
    let mut resampled = 0;
    let budget = settings.points * 20;
    while values.len() < settings.points {
        let candidates: Vec<EvaluationPoint> = (0..settings.points - values.len())
            .map(|_| {
                let mut p = EvaluationPoint::new();
                for s in &symbols {
                    p.set_rational(
                        s.clone(),
                        sampling::rational_in(&mut rng, &settings.box_lo, &settings.box_hi),
                    );
                }
                p
            })
            .collect();
        let results: Vec<Result<f64>> = candidates.par_iter().map(one_point).collect();
        for r in results {
            match r {
                Ok(v) => values.push(v),
                Err(Error::Expr(crate::expr::ExprError::Domain(_))) => resampled += 1,
                Err(e) => return Err(e),
            }
        }
        if resampled > budget {
            return Err(Error::EmptySampleRegion(format!("consistency check for {section}")));
        }
    }
    Ok(Consistency {
        points: values.len(),
        max_relative: values.into_iter().fold(0.0, f64::max),
        tolerance: settings.tol,
        resampled,
    })
}
