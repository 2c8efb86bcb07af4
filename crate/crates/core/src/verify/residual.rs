use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use super::Candidate;
use crate::error::{Error, Result};
use crate::expr::{EvalMode, EvaluationPoint, ExprError, JetCoordinate, Number, Poly, Symbol, Var};
use crate::parser::Settings;
use crate::sampling;

/// `|u|` below this counts as touching the excluded locus `u = 0`.
const ZERO_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualPoint {
    pub coordinates: Vec<(Symbol, BigRational)>,
    pub residual: f64,
    /// Largest absolute single term of the equation at this point.
    pub scale: f64,
    pub normalized: f64,
    pub exact_zero: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualReport {
    pub candidate: String,
    pub seed: u64,
    pub tolerance: f64,
    pub points: Vec<ResidualPoint>,
    pub max_abs: f64,
    pub median_abs: f64,
    pub max_normalized: f64,
    pub pass: bool,
    /// Every sampled residual was an exact rational zero.
    pub exact: bool,
    /// A variable the candidate does not depend on while every term of the
    /// equation differentiates in it, so the residual vanishes identically.
    pub structural: Option<Symbol>,
    /// Rejected sample points, by reason.
    pub excluded: BTreeMap<String, usize>,
}

/// The candidate and its symbolic derivatives for every jet of `dependent`
/// in `delta`, built along shared index prefixes.
pub fn solution_jets(delta: &Poly, dependent: &Symbol, u: &Poly) -> Vec<(JetCoordinate, Poly)> {
    let mut memo: BTreeMap<JetCoordinate, Poly> = BTreeMap::new();
    memo.insert(JetCoordinate::base(dependent.clone()), u.clone());
    let mut wanted: BTreeSet<JetCoordinate> = delta
        .jets()
        .into_iter()
        .filter(|j| j.dependent() == dependent)
        .collect();
    wanted.insert(JetCoordinate::base(dependent.clone()));
    let mut wanted: Vec<JetCoordinate> = wanted.into_iter().collect();
    wanted.sort_by_key(JetCoordinate::order);
    for j in &wanted {
        let mut cur = JetCoordinate::base(dependent.clone());
        for v in j.index() {
            let next = cur.extend(v);
            if !memo.contains_key(&next) {
                let d = memo[&cur].diff_sym(v);
                memo.insert(next.clone(), d);
            }
            cur = next;
        }
    }
    wanted
        .into_iter()
        .map(|j| {
            let p = memo[&j].clone();
            (j, p)
        })
        .collect()
}

/// The structural lemma: an independent variable absent from `u` whose
/// derivative appears in every term of `delta`.
pub fn annihilating_variable(delta: &Poly, dependent: &Symbol, u: &Poly, independents: &[Symbol]) -> Option<Symbol> {
    independents
        .iter()
        .find(|s| {
            !u.contains_symbol(s)
                && !delta.is_zero()
                && delta.terms().all(|(m, _)| {
                    m.factors().iter().any(|(a, _)| {
                        matches!(a, crate::expr::Atom::Var(Var::Jet(j)) if j.dependent() == dependent && j.count(s) > 0)
                    })
                })
        })
        .cloned()
}

enum Outcome {
    Point(ResidualPoint),
    Excluded(String),
}

struct Evaluator<'a> {
    delta: &'a Poly,
    dependent: &'a Symbol,
    jets: Vec<(JetCoordinate, Poly)>,
    exclude_dependent: bool,
    excluded_vars: Vec<Symbol>,
}

impl Evaluator<'_> {
    fn at(&self, coordinates: Vec<(Symbol, BigRational)>) -> Result<Outcome> {
        let mut p = EvaluationPoint::new();
        for (s, v) in &coordinates {
            if self.excluded_vars.contains(s) && *v == BigRational::from_integer(0.into()) {
                return Ok(Outcome::Excluded(format!("{s}=0")));
            }
            p.set_rational(s.clone(), v.clone());
        }
        let mut jet_point = p.clone();
        for (j, e) in &self.jets {
            let value = match e.eval(&p, EvalMode::Exact) {
                Ok(v) => v,
                Err(ExprError::Domain(reason)) => return Ok(Outcome::Excluded(reason)),
                Err(e) => return Err(e.into()),
            };
            if j.order() == 0 && self.exclude_dependent && value.to_f64().abs() <= ZERO_FLOOR {
                return Ok(Outcome::Excluded(format!("{}=0", self.dependent)));
            }
            jet_point.set(j.clone(), value);
        }
        let (value, scale) = match (
            self.delta.eval(&jet_point, EvalMode::Exact),
            self.delta.term_scale(&jet_point),
        ) {
            (Ok(v), Ok(s)) => (v, s),
            (Err(ExprError::Domain(reason)), _) | (_, Err(ExprError::Domain(reason))) => {
                return Ok(Outcome::Excluded(reason))
            }
            (Err(e), _) | (_, Err(e)) => return Err(e.into()),
        };
        let residual = value.to_f64();
        let normalized = if residual == 0.0 {
            0.0
        } else {
            residual.abs() / scale.max(f64::MIN_POSITIVE)
        };
        Ok(Outcome::Point(ResidualPoint {
            coordinates,
            residual,
            scale,
            normalized,
            exact_zero: value.is_exact_zero(),
        }))
    }
}

fn evaluator<'a>(delta: &'a Poly, dependent: &'a Symbol, cand: &Candidate, settings: &Settings) -> Evaluator<'a> {
    Evaluator {
        delta,
        dependent,
        jets: solution_jets(delta, dependent, &cand.u),
        exclude_dependent: settings.exclude.contains(dependent),
        excluded_vars: settings.exclude.iter().filter(|s| *s != dependent).cloned().collect(),
    }
}

fn assemble(
    cand: &Candidate,
    delta: &Poly,
    dependent: &Symbol,
    independents: &[Symbol],
    settings: &Settings,
    points: Vec<ResidualPoint>,
    excluded: BTreeMap<String, usize>,
) -> ResidualReport {
    let mut abs: Vec<f64> = points.iter().map(|p| p.residual.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let median_abs = match abs.len() {
        0 => 0.0,
        n if n % 2 == 1 => abs[n / 2],
        n => (abs[n / 2 - 1] + abs[n / 2]) / 2.0,
    };
    let max_normalized = points.iter().map(|p| p.normalized).fold(0.0, f64::max);
    ResidualReport {
        candidate: cand.name.clone(),
        seed: settings.seed,
        tolerance: settings.tol,
        max_abs: abs.last().copied().unwrap_or(0.0),
        median_abs,
        max_normalized,
        pass: !points.is_empty() && max_normalized <= settings.tol,
        exact: !points.is_empty() && points.iter().all(|p| p.exact_zero),
        structural: annihilating_variable(delta, dependent, &cand.u, independents),
        points,
        excluded,
    }
}

/// Samples `settings.points` rational points in the box, rejecting those in
/// an excluded region or outside the candidate's domain.
pub fn residual(
    delta: &Poly,
    dependent: &Symbol,
    independents: &[Symbol],
    cand: &Candidate,
    settings: &Settings,
) -> Result<ResidualReport> {
    sampled(delta, dependent, independents, cand, settings, None)
}

/// Like [`residual`], with every box point moved by `map` first, so an
/// image of a solution under a flow is checked on the image of the box.
/// Mapped coordinates are rounded to a dyadic grid.
pub fn residual_mapped(
    delta: &Poly,
    dependent: &Symbol,
    independents: &[Symbol],
    cand: &Candidate,
    settings: &Settings,
    map: &BTreeMap<Var, Poly>,
) -> Result<ResidualReport> {
    sampled(delta, dependent, independents, cand, settings, Some(map))
}

/// Nearest multiple of `2^-20`.
fn rounded(x: f64) -> BigRational {
    let scale = f64::from(1u32 << 20);
    BigRational::new(BigInt::from((x * scale).round() as i64), BigInt::from(1u32 << 20))
}

fn move_point(p: Vec<(Symbol, BigRational)>, map: &BTreeMap<Var, Poly>) -> Result<Vec<(Symbol, BigRational)>> {
    let mut at = EvaluationPoint::new();
    for (s, v) in &p {
        at.set_rational(s.clone(), v.clone());
    }
    p.into_iter()
        .map(|(s, v)| match map.get(&Var::Sym(s.clone())) {
            None => Ok((s, v)),
            Some(image) => match image.eval(&at, EvalMode::Exact)? {
                Number::Exact(r) => Ok((s, r)),
                Number::Float(x) if x.is_finite() => Ok((s, rounded(x))),
                Number::Float(x) => Err(ExprError::Domain(format!("{s} maps to {x}")).into()),
            },
        })
        .collect()
}

fn sampled(
    delta: &Poly,
    dependent: &Symbol,
    independents: &[Symbol],
    cand: &Candidate,
    settings: &Settings,
    map: Option<&BTreeMap<Var, Poly>>,
) -> Result<ResidualReport> {
    let ev = evaluator(delta, dependent, cand, settings);
    let mut rng = sampling::stream(settings.seed, &format!("residual/{}", cand.name));
    let mut points = Vec::with_capacity(settings.points);
    let mut excluded: BTreeMap<String, usize> = BTreeMap::new();
    let mut rejected = 0;
    let budget = 20 * settings.points.max(1);
    while points.len() < settings.points {
        let batch = (0..settings.points - points.len())
            .map(|_| {
                let p: Vec<(Symbol, BigRational)> = independents
                    .iter()
                    .map(|s| {
                        (
                            s.clone(),
                            sampling::rational_in(&mut rng, &settings.box_lo, &settings.box_hi),
                        )
                    })
                    .collect();
                match map {
                    Some(m) => move_point(p, m),
                    None => Ok(p),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let results: Vec<Result<Outcome>> = batch.into_par_iter().map(|c| ev.at(c)).collect();
        for r in results {
            match r? {
                Outcome::Point(p) => points.push(p),
                Outcome::Excluded(reason) => {
                    *excluded.entry(reason).or_default() += 1;
                    rejected += 1;
                }
            }
        }
        if rejected > budget {
            let reasons: Vec<String> = excluded.iter().map(|(r, n)| format!("{n} {r}")).collect();
            return Err(Error::EmptySampleRegion(format!(
                "{} of {} points rejected for {} ({})",
                rejected,
                rejected + points.len(),
                cand.name,
                reasons.join(", ")
            )));
        }
    }
    Ok(assemble(
        cand,
        delta,
        dependent,
        independents,
        settings,
        points,
        excluded,
    ))
}

/// Residual at fixed points. Points the candidate cannot be evaluated at
/// are recorded as exclusions.
pub fn residual_at(
    delta: &Poly,
    dependent: &Symbol,
    independents: &[Symbol],
    cand: &Candidate,
    settings: &Settings,
    at: &[Vec<(Symbol, BigRational)>],
) -> Result<ResidualReport> {
    let ev = evaluator(delta, dependent, cand, settings);
    let results: Vec<Result<Outcome>> = at.par_iter().map(|c| ev.at(c.clone())).collect();
    let mut points = Vec::new();
    let mut excluded: BTreeMap<String, usize> = BTreeMap::new();
    for r in results {
        match r? {
            Outcome::Point(p) => points.push(p),
            Outcome::Excluded(reason) => *excluded.entry(reason).or_default() += 1,
        }
    }
    Ok(assemble(
        cand,
        delta,
        dependent,
        independents,
        settings,
        points,
        excluded,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::lift_dependent;

    fn p(s: &str) -> Poly {
        crate::parser::parse_expression(s).unwrap().to_poly()
    }

    fn syms() -> Vec<Symbol> {
        vec!["x".into(), "t".into()]
    }

    fn settings() -> Settings {
        Settings {
            exclude: vec!["u".into()],
            ..Settings::default()
        }
    }

    #[test]
    fn heat_equation_solution_passes() {
        let delta = lift_dependent(&p("D(u,t) - D(u,x,x)"), &"u".into());
        let cand = Candidate::new("heat", p("exp(x + t) + x^2 + 2*t"));
        let r = residual(&delta, &"u".into(), &syms(), &cand, &settings()).unwrap();
        assert!(r.pass);
        assert!(!r.exact);
        assert_eq!(r.points.len(), 20);
        assert!(r.structural.is_none());
    }

    #[test]
    fn polynomial_solution_is_exact() {
        let delta = lift_dependent(&p("D(u,t) - D(u,x,x)"), &"u".into());
        let cand = Candidate::new("poly", p("x^2 + 2*t"));
        let r = residual(&delta, &"u".into(), &syms(), &cand, &settings()).unwrap();
        assert!(r.pass && r.exact);
        assert_eq!(r.max_abs, 0.0);
    }

    #[test]
    fn wrong_solution_fails() {
        let delta = lift_dependent(&p("D(u,t) - D(u,x,x)"), &"u".into());
        let cand = Candidate::new("bad", p("x^2 + t"));
        let r = residual(&delta, &"u".into(), &syms(), &cand, &settings()).unwrap();
        assert!(!r.pass);
        assert!((r.max_normalized - 0.5).abs() < 1e-12);
    }

    #[test]
    fn structural_variable() {
        let delta = lift_dependent(&p("u*D(u,x) + D(u,x,t)^2"), &"u".into());
        assert_eq!(
            annihilating_variable(&delta, &"u".into(), &p("t^2"), &syms()),
            Some("x".into())
        );
        assert_eq!(annihilating_variable(&delta, &"u".into(), &p("x*t"), &syms()), None);
    }

    #[test]
    fn vanishing_candidate_is_rejected_everywhere() {
        let delta = lift_dependent(&p("D(u,t)"), &"u".into());
        let cand = Candidate::new("zero", Poly::zero());
        assert!(matches!(
            residual(&delta, &"u".into(), &syms(), &cand, &settings()),
            Err(Error::EmptySampleRegion(_))
        ));
    }

    #[test]
    fn domain_errors_are_resampled() {
        let delta = lift_dependent(&p("D(u,t) - D(u,x,x)"), &"u".into());
        let cand = Candidate::new("root", p("(x - 2)^(1/2) + 7"));
        let r = residual(&delta, &"u".into(), &syms(), &cand, &settings()).unwrap();
        assert_eq!(r.points.len(), 20);
        assert!(r.excluded.values().sum::<usize>() > 0);
        assert!(r
            .points
            .iter()
            .all(|q| q.coordinates[0].1 > BigRational::from_integer(2.into())));
    }
}
