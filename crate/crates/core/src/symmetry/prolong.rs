use std::collections::BTreeMap;

use super::VectorField;
use crate::expr::{ExprError, JetCoordinate, JetSpace, Poly, Symbol, Var};

/// A vector field together with the prolongation coefficients `phi^J` of
/// every jet coordinate up to `order`.
#[derive(Clone, Debug)]
pub struct ProlongedField {
    base: VectorField,
    order: usize,
    coefficients: BTreeMap<JetCoordinate, Poly>,
}

impl ProlongedField {
    pub fn base(&self) -> &VectorField {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficient(&self, j: &JetCoordinate) -> Option<&Poly> {
        self.coefficients.get(j)
    }

    pub fn coefficients(&self) -> &BTreeMap<JetCoordinate, Poly> {
        &self.coefficients
    }
}

fn space(v: &VectorField, order: usize) -> JetSpace {
    JetSpace::new(v.dependent().clone(), v.independents().to_vec(), order)
}

/// `phi^{K+i} = D_i(phi^K) - sum_k D_i(xi^k) u_{K+k}`.
pub fn prolongation_step(
    v: &VectorField,
    space: &JetSpace,
    parent: &JetCoordinate,
    parent_coefficient: &Poly,
    i: &Symbol,
) -> Result<Poly, ExprError> {
    let mut out = space.total_derivative(parent_coefficient, i)?;
    for (k, xi) in v.independents().iter().zip(v.xi()) {
        if xi.is_zero() {
            continue;
        }
        let dxi = space.total_derivative(xi, i)?;
        if dxi.is_zero() {
            continue;
        }
        let target = parent.extend(k);
        if target.order() > space.max_order {
            return Err(ExprError::JetOrderOverflow {
                coordinate: target.to_string(),
                max_order: space.max_order,
            });
        }
        out = out - dxi.mul(&Poly::jet(target));
    }
    Ok(out)
}

/// Prolongs `v` to every jet coordinate of order at most `order`, building
/// each `phi^J` from the coefficient of `J` minus its last index.
pub fn prolong(v: &VectorField, order: usize) -> Result<ProlongedField, ExprError> {
    let space = space(v, order);
    let mut coefficients = BTreeMap::new();
    for j in space.coordinates_up_to(order) {
        let phi = match j.index().last() {
            None => v.phi().clone(),
            Some(i) => {
                let parent = j.reduce(i).expect("index is non-empty");
                prolongation_step(v, &space, &parent, &coefficients[&parent], i)?
            }
        };
        coefficients.insert(j, phi);
    }
    Ok(ProlongedField {
        base: v.clone(),
        order,
        coefficients,
    })
}

/// `Pr(V)(delta)`: the prolonged field acting as a derivation.
pub fn apply_prolonged(pv: &ProlongedField, delta: &Poly) -> Result<Poly, ExprError> {
    let v = &pv.base;
    let delta = crate::expr::lift_dependent(delta, v.dependent());
    let mut out = Poly::zero();
    for (s, xi) in v.independents().iter().zip(v.xi()) {
        let var = Var::Sym(s.clone());
        if xi.is_zero() || !delta.contains_var(&var) {
            continue;
        }
        out.add_assign(&xi.mul(&delta.diff(&var)));
    }
    for j in delta.jets() {
        if j.dependent() != v.dependent() {
            continue;
        }
        let Some(phi) = pv.coefficients.get(&j) else {
            return Err(ExprError::JetOrderOverflow {
                coordinate: j.to_string(),
                max_order: pv.order,
            });
        };
        if phi.is_zero() {
            continue;
        }
        out.add_assign(&phi.mul(&delta.diff(&Var::Jet(j.clone()))));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expression;

    fn p(s: &str) -> Poly {
        crate::expr::lift_dependent(&parse_expression(s).unwrap().to_poly(), &"u".into())
    }

    fn field(x: &str, y: &str, t: &str, u: &str) -> VectorField {
        VectorField::new(
            vec!["x".into(), "y".into(), "t".into()],
            "u".into(),
            vec![p(x), p(y), p(t)],
            p(u),
        )
    }

    fn jet(index: &[&str]) -> JetCoordinate {
        JetCoordinate::new("u".into(), index.iter().map(|s| Symbol::new(s)))
    }

    #[test]
    fn translation_prolongs_trivially() {
        let pv = prolong(&field("1", "0", "0", "0"), 2).unwrap();
        assert!(pv.coefficients().values().all(Poly::is_zero));
    }

    #[test]
    fn scaling_first_order() {
        let v3 = prolong(&field("2*x", "0", "2*t", "-u"), 1).unwrap();
        assert_eq!(v3.coefficient(&jet(&["x"])).unwrap(), &p("-3*D(u,x)"));
        assert_eq!(v3.coefficient(&jet(&["y"])).unwrap(), &p("-D(u,y)"));
        let v1 = prolong(&field("0", "2*y", "0", "-u"), 1).unwrap();
        assert_eq!(v1.coefficient(&jet(&["y"])).unwrap(), &p("-3*D(u,y)"));
        assert_eq!(v1.coefficient(&jet(&["x"])).unwrap(), &p("-D(u,x)"));
        assert_eq!(v1.coefficient(&jet(&["t"])).unwrap(), &p("-D(u,t)"));
    }

    #[test]
    fn path_independent() {
        let v = field("x*y + u*t", "y^2 - t*u", "x + u", "x*u + y*t");
        let space = space(&v, 2);
        let phi_x = prolongation_step(&v, &space, &jet(&[]), v.phi(), &"x".into()).unwrap();
        let phi_y = prolongation_step(&v, &space, &jet(&[]), v.phi(), &"y".into()).unwrap();
        let a = prolongation_step(&v, &space, &jet(&["x"]), &phi_x, &"y".into()).unwrap();
        let b = prolongation_step(&v, &space, &jet(&["y"]), &phi_y, &"x".into()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constants_are_annihilated() {
        let pv = prolong(&field("x", "y", "t", "u"), 1).unwrap();
        assert!(apply_prolonged(&pv, &p("7")).unwrap().is_zero());
    }
}
