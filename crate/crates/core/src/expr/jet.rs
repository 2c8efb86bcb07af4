use std::collections::BTreeMap;

use super::poly::Poly;
use super::symbol::{JetCoordinate, Symbol, Var};
use super::ExprError;

/// Independent variables, one dependent variable and an order bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetSpace {
    pub dependent: Symbol,
    pub independents: Vec<Symbol>,
    pub max_order: usize,
}

impl JetSpace {
    pub fn new(dependent: Symbol, independents: Vec<Symbol>, max_order: usize) -> Self {
        JetSpace {
            dependent,
            independents,
            max_order,
        }
    }

    pub fn coordinate(&self, index: &[Symbol]) -> JetCoordinate {
        JetCoordinate::new(self.dependent.clone(), index.iter().cloned())
    }

    /// Replaces the bare dependent symbol by its order-zero jet coordinate.
    pub fn lift(&self, e: &Poly) -> Poly {
        lift_dependent(e, &self.dependent)
    }

    /// Total derivative `D_var`.
    pub fn total_derivative(&self, e: &Poly, var: &Symbol) -> Result<Poly, ExprError> {
        let inner = [(var.clone(), Poly::one())];
        chain_derivative(e, var, &self.dependent, &inner, self.max_order)
    }

    /// Total derivative along a multi-index, applied left to right.
    pub fn total_derivative_multi(&self, e: &Poly, index: &[Symbol]) -> Result<Poly, ExprError> {
        let mut out = self.lift(e);
        for v in index {
            out = self.total_derivative(&out, v)?;
        }
        Ok(out)
    }

    /// Every coordinate of order at most `order`, in graded order.
    pub fn coordinates_up_to(&self, order: usize) -> Vec<JetCoordinate> {
        let mut out = vec![JetCoordinate::base(self.dependent.clone())];
        let mut layer = out.clone();
        for _ in 0..order {
            let mut next = Vec::new();
            for j in &layer {
                let start = j.index().last();
                for v in &self.independents {
                    if start.is_some_and(|s| v < s) {
                        continue;
                    }
                    next.push(j.extend(v));
                }
            }
            next.sort();
            next.dedup();
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

/// Replaces the bare symbol `dependent` by its order-zero jet coordinate.
pub fn lift_dependent(e: &Poly, dependent: &Symbol) -> Poly {
    if !e.contains_symbol(dependent) {
        return e.clone();
    }
    let map = BTreeMap::from([(
        Var::Sym(dependent.clone()),
        Poly::jet(JetCoordinate::base(dependent.clone())),
    )]);
    e.substitute(&map)
}

/// Derivative by `var` of an expression in jet coordinates of `dependent`,
/// where differentiating a coordinate `J` yields `sum_k inner_k * J∪k`.
///
/// With `inner = [(var, 1)]` this is the ordinary total derivative; a change
/// of variables passes the partials of the new independent variables.
pub fn chain_derivative(
    e: &Poly,
    var: &Symbol,
    dependent: &Symbol,
    inner: &[(Symbol, Poly)],
    max_order: usize,
) -> Result<Poly, ExprError> {
    let e = lift_dependent(e, dependent);
    let mut out = e.diff_sym(var);
    for j in e.jets() {
        if j.dependent() != dependent {
            continue;
        }
        let de = e.diff(&Var::Jet(j.clone()));
        if de.is_zero() {
            continue;
        }
        for (k, dk) in inner {
            if dk.is_zero() {
                continue;
            }
            if j.order() + 1 > max_order {
                return Err(ExprError::JetOrderOverflow {
                    coordinate: j.extend(k).to_string(),
                    max_order,
                });
            }
            out.add_assign(&de.mul(dk).mul(&Poly::jet(j.extend(k))));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space() -> JetSpace {
        JetSpace::new("u".into(), vec!["x".into(), "y".into(), "t".into()], 6)
    }

    #[test]
    fn product_rule() {
        let s = space();
        let ux = Poly::jet(s.coordinate(&["x".into()]));
        let e = Poly::sym("u").mul(&ux);
        let d = s.total_derivative(&e, &"x".into()).unwrap();
        let uxx = Poly::jet(s.coordinate(&["x".into(), "x".into()]));
        let u0 = Poly::jet(s.coordinate(&[]));
        assert_eq!(d, ux.mul(&ux) + u0.mul(&uxx));
    }

    #[test]
    fn total_derivatives_commute() {
        let s = space();
        let ut = Poly::jet(s.coordinate(&["t".into()]));
        let e = Poly::sym("x")
            .mul(&ut)
            .mul(&Poly::sym("u").pow(num_rational::Rational64::new(3, 1)));
        let a = s.total_derivative_multi(&e, &["x".into(), "t".into()]).unwrap();
        let b = s.total_derivative_multi(&e, &["t".into(), "x".into()]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn order_bound_is_enforced() {
        let s = JetSpace::new("u".into(), vec!["x".into()], 1);
        let ux = Poly::jet(s.coordinate(&["x".into()]));
        assert!(matches!(
            s.total_derivative(&ux, &"x".into()),
            Err(ExprError::JetOrderOverflow { .. })
        ));
    }

    #[test]
    fn coordinate_listing() {
        let s = JetSpace::new("u".into(), vec!["x".into(), "y".into()], 3);
        assert_eq!(s.coordinates_up_to(2).len(), 6);
        assert_eq!(s.coordinates_up_to(3).len(), 10);
    }
}
