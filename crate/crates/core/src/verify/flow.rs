use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;

use super::Candidate;
use crate::error::{Error, Result};
use crate::expr::{JetCoordinate, Poly, Var};
use crate::symmetry::VectorField;

/// `z -> a(eps) z + b(eps)`, the flow of `alpha z + beta`.
#[derive(Clone, Debug, PartialEq)]
struct Affine {
    alpha: BigRational,
    beta: BigRational,
}

impl Affine {
    fn of(component: &Poly, var: &Var) -> Option<Affine> {
        if component.vars().iter().any(|v| v != var) {
            return None;
        }
        let coeffs = component.coefficients_in(var).ok()?;
        let get = |k: u32| match coeffs.get(&k) {
            Some(c) => c.as_constant(),
            None => Some(BigRational::zero()),
        };
        if coeffs.keys().any(|&k| k > 1) {
            return None;
        }
        Some(Affine {
            alpha: get(1)?,
            beta: get(0)?,
        })
    }

    fn apply(&self, z: &Poly, eps: &BigRational) -> Poly {
        if self.alpha.is_zero() {
            return z + &Poly::constant(&self.beta * eps);
        }
        let grow = Poly::exp(Poly::constant(&self.alpha * eps));
        let shift = (&grow - &Poly::one()).scale(&(&self.beta / &self.alpha));
        &z.mul(&grow) + &shift
    }
}

/// The one-parameter group of a field whose components each depend
/// affinely on their own coordinate only: translations, scalings and their
/// combinations.
#[derive(Clone, Debug)]
pub struct GroupAction {
    pub label: String,
    pub field: VectorField,
    pub epsilon: BigRational,
    independent: Vec<Affine>,
    dependent: Affine,
}

impl GroupAction {
    pub fn new(label: impl Into<String>, field: VectorField, epsilon: BigRational) -> Result<Self> {
        let label = label.into();
        let unsupported = || Error::UnsupportedGenerator(label.clone());
        let independent = field
            .independents()
            .iter()
            .zip(field.xi())
            .map(|(s, c)| Affine::of(c, &Var::Sym(s.clone())).ok_or_else(unsupported))
            .collect::<Result<Vec<_>>>()?;
        let dependent = Affine::of(field.phi(), &field.base_var()).ok_or_else(unsupported)?;
        Ok(GroupAction {
            label,
            field,
            epsilon,
            independent,
            dependent,
        })
    }

    /// The same generator with parameter `epsilon`.
    pub fn with_epsilon(&self, epsilon: BigRational) -> GroupAction {
        GroupAction {
            epsilon,
            ..self.clone()
        }
    }

    /// Images of the independent variables under the flow by `eps`.
    pub fn point_map(&self, eps: &BigRational) -> BTreeMap<Var, Poly> {
        self.field
            .independents()
            .iter()
            .zip(&self.independent)
            .map(|(s, a)| (Var::Sym(s.clone()), a.apply(&Poly::var(s.clone()), eps)))
            .collect()
    }
}

/// `u*(x) = U_eps(u(X_{-eps}(x)))`: the graph of `u` carried along the flow.
pub fn transform_solution(cand: &Candidate, action: &GroupAction) -> Result<Candidate> {
    let back = action.point_map(&-&action.epsilon);
    let moved = cand.u.substitute(&back);
    let base = Var::Jet(JetCoordinate::base(action.field.dependent().clone()));
    let lifted = action.dependent.apply(&Poly::var(base.clone()), &action.epsilon);
    let u = lifted.substitute(&BTreeMap::from([(base, moved)]));
    Ok(Candidate::new(
        format!("{}@{}:{}", cand.name, action.label, action.epsilon),
        u,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Poly {
        crate::parser::parse_expression(s).unwrap().to_poly()
    }

    fn field(x: &str, y: &str, t: &str, u: &str) -> VectorField {
        VectorField::new(
            vec!["x".into(), "y".into(), "t".into()],
            "u".into(),
            vec![p(x), p(y), p(t)],
            crate::expr::lift_dependent(&p(u), &"u".into()),
        )
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn zero_parameter_is_identity() {
        let g = Candidate::new("g", p("x^2*y + exp(t)*(y + 1)^(1/2)"));
        let a = GroupAction::new("V3", field("2*x", "0", "2*t", "-u"), q(0, 1)).unwrap();
        assert_eq!(transform_solution(&g, &a).unwrap().u, g.u);
    }

    #[test]
    fn translation_shifts_argument() {
        let g = Candidate::new("g", p("x^3*t + y"));
        let a = GroupAction::new("V5", field("1", "0", "0", "0"), q(1, 1)).unwrap();
        assert_eq!(transform_solution(&g, &a).unwrap().u, p("(x - 1)^3*t + y"));
    }

    #[test]
    fn scaling_flow() {
        let g = Candidate::new("g", p("x*t^2"));
        let a = GroupAction::new("V3", field("2*x", "0", "2*t", "-u"), q(1, 2)).unwrap();
        let expected = p("exp(-1/2)*exp(-1)*x*exp(-2)*t^2");
        assert_eq!(transform_solution(&g, &a).unwrap().u, expected);
    }

    #[test]
    fn flows_compose() {
        let g = Candidate::new("g", p("(y*(2*t + 3))^(-1/2) + x*y"));
        let a = GroupAction::new("V", field("2*x + 1", "y", "2*t", "-u + 3"), q(1, 3)).unwrap();
        let once = transform_solution(&g, &a.with_epsilon(q(5, 6))).unwrap();
        let twice = transform_solution(&transform_solution(&g, &a).unwrap(), &a.with_epsilon(q(1, 2))).unwrap();
        assert_eq!(once.u, twice.u);
    }

    #[test]
    fn rotation_is_unsupported() {
        let r = GroupAction::new("R", field("y", "-x", "0", "0"), q(1, 1));
        assert!(matches!(r, Err(Error::UnsupportedGenerator(_))));
        let r = GroupAction::new("Q", field("x^2", "0", "0", "0"), q(1, 1));
        assert!(matches!(r, Err(Error::UnsupportedGenerator(_))));
    }
}
