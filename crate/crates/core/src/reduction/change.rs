use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{lift_dependent, EvaluationPoint, JetCoordinate, Poly, Symbol, Var};
use crate::parser::StageSpec;
use crate::sampling;

/// `dep = A * G(new vars)` with the new variables given in the old ones,
/// plus an inverse map expressing the old variables through the new
/// variables and spectator coordinates.
#[derive(Clone, Debug)]
pub struct ChangeOfVariables {
    pub old_vars: Vec<Symbol>,
    pub old_dependent: Symbol,
    pub function: Symbol,
    pub new_vars: Vec<Symbol>,
    pub forward: Vec<Poly>,
    pub prefactor: Poly,
    pub inverse: BTreeMap<Var, Poly>,
    /// Spectator coordinates and, when they are not old variables, their
    /// definition in the old variables.
    pub spectators: Vec<(Symbol, Option<Poly>)>,
}

impl ChangeOfVariables {
    pub fn from_stage(stage: &StageSpec, old_vars: &[Symbol]) -> Result<Self> {
        let function_base = Var::Jet(JetCoordinate::base(stage.function.clone()));
        let rhs = stage.dependent_expr.to_poly();
        let coeffs = rhs.coefficients_in(&function_base).map_err(|_| {
            Error::Input(format!(
                "{} = ... must be linear in {}",
                stage.dependent, stage.function
            ))
        })?;
        let prefactor = match (coeffs.len(), coeffs.get(&1)) {
            (1, Some(a)) => a.clone(),
            _ => {
                return Err(Error::Input(format!(
                    "{} = ... must have the form A*{}",
                    stage.dependent, stage.function
                )))
            }
        };
        if prefactor.jets().iter().any(|j| j.dependent() == &stage.function) {
            return Err(Error::Input(format!(
                "prefactor of {} depends on its derivatives",
                stage.function
            )));
        }
        let forward = stage
            .new_vars
            .iter()
            .map(|v| {
                stage
                    .forward
                    .iter()
                    .find(|(n, _)| n == v)
                    .map(|(_, e)| e.to_poly())
                    .ok_or_else(|| Error::Input(format!("new variable {v} is not defined")))
            })
            .collect::<Result<Vec<_>>>()?;
        let inverse = stage
            .inverse
            .iter()
            .map(|(v, e)| (Var::Sym(v.clone()), e.to_poly()))
            .collect();
        let spectators = stage
            .spectators
            .iter()
            .map(|(s, d)| (s.clone(), d.as_ref().map(|e| e.to_poly())))
            .collect();
        Ok(ChangeOfVariables {
            old_vars: old_vars.to_vec(),
            old_dependent: stage.dependent.clone(),
            function: stage.function.clone(),
            new_vars: stage.new_vars.clone(),
            forward,
            prefactor,
            inverse,
            spectators,
        })
    }

    /// `dep` written through the new function, as a polynomial in its jets.
    pub fn dependent_value(&self) -> Poly {
        self.prefactor
            .mul(&Poly::jet(JetCoordinate::base(self.function.clone())))
    }

    /// Partials of the new variables with respect to `old`.
    pub fn inner_partials(&self, old: &Symbol) -> Vec<(Symbol, Poly)> {
        self.new_vars
            .iter()
            .zip(&self.forward)
            .map(|(n, f)| (n.clone(), f.diff_sym(old)))
            .collect()
    }

    pub fn spectator_symbols(&self) -> Vec<Symbol> {
        self.spectators.iter().map(|(s, _)| s.clone()).collect()
    }

    /// Values of the new variables and spectators at an old-variable point.
    pub fn forward_point(&self, old: &EvaluationPoint) -> Result<Vec<(Symbol, f64)>> {
        let mut out = Vec::new();
        for (n, f) in self.new_vars.iter().zip(&self.forward) {
            out.push((n.clone(), f.eval_f64(old)?));
        }
        for (s, def) in &self.spectators {
            let v = match def {
                Some(d) => d.eval_f64(old)?,
                None => Poly::var(s.clone()).eval_f64(old)?,
            };
            out.push((s.clone(), v));
        }
        Ok(out)
    }

    /// Numerical rank of the Jacobian of the new variables at a few
    /// sampled points must equal their number.
    pub fn check_rank(&self, symbols: &[Symbol], seed: u64, section: &str) -> Result<()> {
        let mut rng = sampling::stream(seed, section);
        let jac: Vec<Vec<Poly>> = self
            .forward
            .iter()
            .map(|f| self.old_vars.iter().map(|v| f.diff_sym(v)).collect())
            .collect();
        let mut sampled: std::collections::BTreeSet<Symbol> = symbols.iter().cloned().collect();
        for f in &self.forward {
            sampled.extend(f.vars().into_iter().filter_map(|v| match v {
                Var::Sym(s) => Some(s),
                _ => None,
            }));
        }
        for _ in 0..4 {
            let mut p = EvaluationPoint::new();
            for s in &sampled {
                p.set_f64(s.clone(), sampling::float_in(&mut rng, 1.0, 3.0));
            }
            let Ok(rows) = jac
                .iter()
                .map(|r| r.iter().map(|e| e.eval_f64(&p)).collect::<Result<Vec<f64>, _>>())
                .collect::<Result<Vec<_>, _>>()
            else {
                continue;
            };
            if float_rank(rows) == self.new_vars.len() {
                return Ok(());
            }
        }
        Err(Error::RankDeficient(format!(
            "the map to ({}) has rank below {}",
            self.new_vars.iter().map(Symbol::name).collect::<Vec<_>>().join(", "),
            self.new_vars.len()
        )))
    }

    pub(crate) fn lift(&self, e: &Poly) -> Poly {
        lift_dependent(e, &self.old_dependent)
    }
}

fn float_rank(mut rows: Vec<Vec<f64>>) -> usize {
    let scale = rows.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..ncols {
        let Some(p) = (rank..rows.len()).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs())) else {
            break;
        };
        if rows[p][c].abs() <= 1e-10 * scale {
            continue;
        }
        rows.swap(rank, p);
        let (top, rest) = rows.split_at_mut(rank + 1);
        let pivot = &top[rank];
        for row in rest {
            let k = row[c] / pivot[c];
            for (x, p) in row.iter_mut().zip(pivot).skip(c) {
                *x -= k * p;
            }
        }
        rank += 1;
    }
    rank
}
