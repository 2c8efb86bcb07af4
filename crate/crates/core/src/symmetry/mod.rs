//! Prolongation, determining equations and the structure of the symmetry
//! algebra.

mod algebra;
mod determining;
mod field;
mod prolong;

pub use algebra::{
    coefficient_matrix, commutator_table, coordinates_in, format_combination, rank_of, reference_entries, same_span,
    span_contains, table_is_antisymmetric, table_mismatches, CommutatorTable, Entry,
};
pub use determining::{
    back_substitutes, determining_system, determining_system_symbolic, on_manifold_reduce, solve_nullspace, Ansatz,
    Column, LeadingSplit, LinearSystem,
};
pub use field::VectorField;
pub use prolong::{apply_prolonged, prolong, prolongation_step, ProlongedField};

use rayon::prelude::*;

use crate::error::Result;
use crate::expr::{EvaluationPoint, JetCoordinate, JetSpace, Poly, Symbol, Var};
use crate::sampling;

/// Result of evaluating `Pr(V)(delta)` at random points of `delta = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldCheck {
    pub points: usize,
    /// `max |Pr(V)(delta)| / (1 + largest term of delta)` over the points.
    pub max_normalized: f64,
}

/// Samples every jet coordinate up to the equation's order, solves
/// `delta = 0` for `leading`, and evaluates the prolonged field on `delta`.
pub fn on_manifold_check(
    delta: &Poly,
    leading: &JetCoordinate,
    field: &VectorField,
    points: usize,
    seed: u64,
    section: &str,
) -> Result<ManifoldCheck> {
    let delta = crate::expr::lift_dependent(delta, field.dependent());
    let order = delta.jet_order().unwrap_or(0).max(1);
    let split = LeadingSplit::new(&delta, leading)?;
    let condition = apply_prolonged(&prolong(field, order)?, &delta)?;
    let space = JetSpace::new(field.dependent().clone(), field.independents().to_vec(), order);
    let coords: Vec<JetCoordinate> = space
        .coordinates_up_to(order)
        .into_iter()
        .filter(|j| j != leading)
        .collect();
    let mut symbols: Vec<Symbol> = delta.symbols().into_iter().chain(condition.symbols()).collect();
    symbols.sort();
    symbols.dedup();
    let mut rng = sampling::stream(seed, section);
    let samples: Vec<EvaluationPoint> = (0..points)
        .map(|_| {
            let mut p = EvaluationPoint::new();
            for s in &symbols {
                p.set_f64(s.clone(), sampling::float_in(&mut rng, 1.0, 3.0));
            }
            for j in &coords {
                let v = if j.order() == 0 {
                    sampling::float_in(&mut rng, 1.0, 3.0)
                } else {
                    sampling::float_in(&mut rng, -2.0, 2.0)
                };
                p.set_f64(j.clone(), v);
            }
            p
        })
        .collect();
    let values: Vec<f64> = samples
        .into_par_iter()
        .map(|mut p| -> Result<f64> {
            let k = split.kappa.eval_f64(&p)?;
            let r = split.rest.eval_f64(&p)?;
            p.set_f64(Var::Jet(leading.clone()), -r / k);
            let scale = delta.term_scale(&p)?;
            Ok(condition.eval_f64(&p)?.abs() / (1.0 + scale))
        })
        .collect::<Result<_>>()?;
    Ok(ManifoldCheck {
        points,
        max_normalized: values.into_iter().fold(0.0, f64::max),
    })
}
