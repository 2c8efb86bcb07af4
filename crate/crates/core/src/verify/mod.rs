//! Residual verification of closed-form solutions and their images under
//! symmetry flows.

mod fd;
mod flow;
mod residual;

pub use fd::fd_check;
pub use flow::{transform_solution, GroupAction};
pub use residual::{
    annihilating_variable, residual, residual_at, residual_mapped, solution_jets, ResidualPoint, ResidualReport,
};

use crate::error::{Error, Result};
use crate::expr::{Poly, Symbol, Var};
use crate::parser::{SolutionBody, SolutionSpec};

/// A closed-form `u(x, y, t)` with every constant bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub name: String,
    pub u: Poly,
}

impl Candidate {
    pub fn new(name: impl Into<String>, u: Poly) -> Self {
        Candidate { name: name.into(), u }
    }

    pub fn from_spec(spec: &SolutionSpec, independents: &[Symbol]) -> Result<Self> {
        let expr = match &spec.body {
            SolutionBody::Closed(e) => e,
            SolutionBody::Unsupported { function } => return Err(Error::UnsupportedFunction(function.clone())),
        };
        let bindings = spec
            .bindings
            .iter()
            .map(|(s, v)| (Var::Sym(s.clone()), Poly::constant(v.clone())))
            .collect();
        let u = expr.to_poly().substitute(&bindings);
        if let Some(s) = u.symbols().into_iter().find(|s| !independents.contains(s)) {
            return Err(Error::Input(format!("solution {} leaves {s} unbound", spec.name)));
        }
        if !u.jets().is_empty() {
            return Err(Error::Input(format!("solution {} refers to derivatives", spec.name)));
        }
        Ok(Candidate::new(spec.name.clone(), u))
    }
}
