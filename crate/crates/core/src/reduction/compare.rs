use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::expr::{EvaluationPoint, JetCoordinate, Poly, Symbol, Var};
use crate::sampling;

/// Outcome of sampling `e1 / e2` over fibers of jet values.
#[derive(Clone, Debug, PartialEq)]
pub struct Proportionality {
    pub proportional: bool,
    pub base_points: usize,
    pub fiber_points: usize,
    /// First sampled ratio at each base point.
    pub ratios: Vec<f64>,
    /// Largest relative spread of the ratio within one base point.
    pub max_spread: f64,
    /// Whether the ratio changes between base points.
    pub factor_varies: bool,
    pub tolerance: f64,
}

const BASE_POINTS: usize = 4;
const FIBER_POINTS: usize = 8;

fn sample(
    e1: &Poly,
    e2: &Poly,
    fiber: &BTreeSet<Var>,
    base: &[Var],
    seed: u64,
    section: &str,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let mut rng = sampling::stream(seed, section);
    let mut degenerate = 0;
    let mut per_base = Vec::new();
    for _ in 0..BASE_POINTS {
        let mut p = EvaluationPoint::new();
        for v in base {
            p.set_f64(v.clone(), sampling::float_in(&mut rng, 1.0, 3.0));
        }
        let mut ratios = Vec::new();
        for _ in 0..FIBER_POINTS {
            for v in fiber {
                let value = match v {
                    Var::Jet(j) if j.order() > 0 => sampling::float_in(&mut rng, -2.0, 2.0),
                    _ => sampling::float_in(&mut rng, 1.0, 3.0),
                };
                p.set_f64(v.clone(), value);
            }
            let a = e1.eval_f64(&p)?;
            let b = e2.eval_f64(&p)?;
            if b == 0.0 || b.abs() <= 1e-12 * e2.term_scale(&p)? {
                degenerate += 1;
                continue;
            }
            ratios.push(a / b);
        }
        per_base.push(ratios);
    }
    Ok((per_base, degenerate))
}

/// Compares two equations up to a factor that may depend on the base
/// variables but not on the fiber (jet) variables.
pub fn equations_proportional(
    e1: &Poly,
    e2: &Poly,
    fiber: &BTreeSet<Var>,
    seed: u64,
    tolerance: f64,
    section: &str,
) -> Result<Proportionality> {
    let mut vars: BTreeSet<Var> = e1.vars();
    vars.extend(e2.vars());
    let base: Vec<Var> = vars.iter().filter(|v| !fiber.contains(v)).cloned().collect();
    let fiber: BTreeSet<Var> = fiber.iter().filter(|v| vars.contains(v)).cloned().collect();
    let total = BASE_POINTS * FIBER_POINTS;
    let (mut per_base, mut degenerate) = sample(e1, e2, &fiber, &base, seed, section)?;
    if 2 * degenerate > total {
        (per_base, degenerate) = sample(e1, e2, &fiber, &base, seed, &format!("{section}#retry"))?;
        if 2 * degenerate > total {
            return Err(Error::DegenerateSample);
        }
    }
    let mut max_spread = 0.0f64;
    let mut ratios = Vec::new();
    let mut nonzero = true;
    for rs in &per_base {
        let Some(&first) = rs.first() else { continue };
        let hi = rs.iter().cloned().fold(f64::MIN, f64::max);
        let lo = rs.iter().cloned().fold(f64::MAX, f64::min);
        let mag = rs.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if mag <= tolerance {
            nonzero = false;
        }
        max_spread = max_spread.max((hi - lo) / mag.max(f64::MIN_POSITIVE));
        ratios.push(first);
    }
    let factor_varies = ratios
        .iter()
        .any(|r| (r - ratios[0]).abs() > 1e-6 * r.abs().max(ratios[0].abs()));
    Ok(Proportionality {
        proportional: nonzero && max_spread <= tolerance,
        base_points: per_base.len(),
        fiber_points: FIBER_POINTS,
        ratios,
        max_spread,
        factor_varies,
        tolerance,
    })
}

/// Exact best fit `F^p * e1 = multiplier * F^q * e2 + difference` with
/// `power = q - p`, where `F` is the base jet of the new function.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub power: i32,
    pub multiplier: Poly,
    pub difference: Poly,
}

impl Alignment {
    pub fn exact(&self) -> bool {
        self.difference.is_zero()
    }
}

const MAX_POWER: i32 = 6;

/// Searches multipliers read off from matching fiber monomials, and powers
/// of the new function up to six, for the fit with the fewest leftover
/// terms.
pub fn align_with_reference(e1: &Poly, e2: &Poly, function: &Symbol) -> Option<Alignment> {
    let base = Poly::jet(JetCoordinate::base(function.clone()));
    let mut fiber: BTreeSet<Var> = e1.vars();
    fiber.extend(e2.vars());
    fiber.retain(|v| v.as_jet().is_some_and(|j| j.dependent() == function));
    fiber.insert(Var::Jet(JetCoordinate::base(function.clone())));
    let mut best: Option<(usize, Alignment)> = None;
    let mut powers: Vec<i32> = (-MAX_POWER..=MAX_POWER).collect();
    powers.sort_by_key(|k| k.abs());
    for k in powers {
        let lhs = e1.mul(&base.pow(i64::from((-k).max(0)).into()));
        let rhs = e2.mul(&base.pow(i64::from(k.max(0)).into()));
        let (Ok(a), Ok(b)) = (lhs.collect(&fiber), rhs.collect(&fiber)) else {
            continue;
        };
        for (key, cb) in &b {
            let (Some(ca), Some((m, c))) = (a.get(key), cb.as_single_term()) else {
                continue;
            };
            let multiplier = ca.mul(&m.inverse()).scale(&c.recip());
            let difference = &lhs - &rhs.mul(&multiplier);
            let size = difference.len();
            if best.as_ref().is_none_or(|(s, _)| size < *s) {
                best = Some((
                    size,
                    Alignment {
                        power: k,
                        multiplier,
                        difference,
                    },
                ));
            }
        }
    }
    best.map(|(_, a)| a)
}
