use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::Signed;

use crate::error::{Error, Result};
use crate::expr::{Expr, JetCoordinate, Poly, Symbol, Var};
use crate::parser::{FieldSpec, InfinitesimalSpec};

/// `sum_i xi_i d/dx_i + phi d/du` with coefficients in the independent
/// variables and the order-zero jet of `u`.
#[derive(Clone, PartialEq, Eq)]
pub struct VectorField {
    independents: Vec<Symbol>,
    dependent: Symbol,
    xi: Vec<Poly>,
    phi: Poly,
}

impl VectorField {
    pub fn new(independents: Vec<Symbol>, dependent: Symbol, xi: Vec<Poly>, phi: Poly) -> Self {
        assert_eq!(independents.len(), xi.len());
        let lift = |p: Poly| crate::expr::lift_dependent(&p, &dependent);
        let xi = xi.into_iter().map(lift).collect();
        let phi = lift(phi);
        VectorField {
            independents,
            dependent,
            xi,
            phi,
        }
    }

    pub fn zero(independents: Vec<Symbol>, dependent: Symbol) -> Self {
        let n = independents.len();
        VectorField::new(independents, dependent, vec![Poly::zero(); n], Poly::zero())
    }

    pub fn from_spec(spec: &FieldSpec, independents: &[Symbol], dependent: &Symbol) -> Result<Self> {
        let mut xi = vec![Poly::zero(); independents.len()];
        let mut phi = Poly::zero();
        for (v, e) in &spec.components {
            if v == dependent {
                phi = e.to_poly();
            } else if let Some(i) = independents.iter().position(|s| s == v) {
                xi[i] = e.to_poly();
            } else {
                return Err(Error::Input(format!(
                    "field {} has a component for unknown variable {v}",
                    spec.name
                )));
            }
        }
        let f = VectorField::new(independents.to_vec(), dependent.clone(), xi, phi);
        if let Some(j) = f.components().flat_map(|p| p.jets()).find(|j| j.order() > 0) {
            return Err(Error::Input(format!(
                "field {} depends on the derivative {j}",
                spec.name
            )));
        }
        Ok(f)
    }

    /// One field per parameter of a family of infinitesimals that is linear
    /// and homogeneous in its parameters.
    pub fn family_directions(
        spec: &InfinitesimalSpec,
        independents: &[Symbol],
        dependent: &Symbol,
    ) -> Result<Vec<(Symbol, VectorField)>> {
        let zero: BTreeMap<Var, Poly> = spec
            .params
            .iter()
            .map(|c| (Var::Sym(c.clone()), Poly::zero()))
            .collect();
        let mut out = Vec::new();
        for c in &spec.params {
            let mut components = Vec::new();
            for (v, e) in &spec.components {
                let p = e.to_poly();
                if !p.substitute(&zero).is_zero() {
                    return Err(Error::Input(format!("{} has a part free of its parameters", spec.name)));
                }
                let d = p.diff_sym(c);
                if spec.params.iter().any(|k| d.contains_symbol(k)) {
                    return Err(Error::Input(format!("{} is not linear in {c}", spec.name)));
                }
                components.push((v.clone(), d.to_expr()));
            }
            let field = FieldSpec {
                name: c.name().to_string(),
                components,
            };
            out.push((c.clone(), VectorField::from_spec(&field, independents, dependent)?));
        }
        Ok(out)
    }

    pub fn independents(&self) -> &[Symbol] {
        &self.independents
    }

    pub fn dependent(&self) -> &Symbol {
        &self.dependent
    }

    pub fn xi(&self) -> &[Poly] {
        &self.xi
    }

    pub fn phi(&self) -> &Poly {
        &self.phi
    }

    pub fn base_var(&self) -> Var {
        Var::Jet(JetCoordinate::base(self.dependent.clone()))
    }

    /// Coefficients in the order `xi_1, .., xi_n, phi`.
    pub fn components(&self) -> impl Iterator<Item = &Poly> {
        self.xi.iter().chain(std::iter::once(&self.phi))
    }

    /// Variables in the order matching [`components`](Self::components).
    pub fn variables(&self) -> Vec<Var> {
        self.independents
            .iter()
            .map(|s| Var::Sym(s.clone()))
            .chain(std::iter::once(self.base_var()))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.components().all(Poly::is_zero)
    }

    /// The field as a first-order derivation on functions of `(x, u)`.
    pub fn apply(&self, f: &Poly) -> Poly {
        let f = crate::expr::lift_dependent(f, &self.dependent);
        let mut out = Poly::zero();
        for (v, c) in self.variables().iter().zip(self.components()) {
            if c.is_zero() || !f.contains_var(v) {
                continue;
            }
            out.add_assign(&c.mul(&f.diff(v)));
        }
        out
    }

    fn map(&self, f: impl Fn(&Poly) -> Poly) -> VectorField {
        VectorField {
            independents: self.independents.clone(),
            dependent: self.dependent.clone(),
            xi: self.xi.iter().map(&f).collect(),
            phi: f(&self.phi),
        }
    }

    fn zip(&self, other: &VectorField, f: impl Fn(&Poly, &Poly) -> Poly) -> VectorField {
        assert_eq!(self.independents, other.independents, "fields over different variables");
        VectorField {
            independents: self.independents.clone(),
            dependent: self.dependent.clone(),
            xi: self.xi.iter().zip(&other.xi).map(|(a, b)| f(a, b)).collect(),
            phi: f(&self.phi, &other.phi),
        }
    }

    pub fn scale(&self, k: &BigRational) -> VectorField {
        self.map(|p| p.scale(k))
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        self.zip(other, |a, b| a - b)
    }

    /// Lie bracket `[self, other]`.
    pub fn commutator(&self, other: &VectorField) -> VectorField {
        let xi = self
            .xi
            .iter()
            .zip(&other.xi)
            .map(|(a, b)| self.apply(b) - other.apply(a))
            .collect();
        let phi = self.apply(&other.phi) - other.apply(&self.phi);
        VectorField {
            independents: self.independents.clone(),
            dependent: self.dependent.clone(),
            xi,
            phi,
        }
    }

    pub fn substitute(&self, map: &BTreeMap<Var, Poly>) -> VectorField {
        self.map(|p| p.substitute(map))
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self
            .independents
            .iter()
            .map(Symbol::name)
            .chain(std::iter::once(self.dependent.name()));
        let mut first = true;
        for (name, c) in names.zip(self.components()) {
            if c.is_zero() {
                continue;
            }
            let (neg, body) = match c.as_single_term() {
                Some((_, k)) if k.is_negative() => (true, -c),
                _ => (false, c.clone()),
            };
            let sep = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            first = false;
            let coef = match (body.as_constant(), body.len()) {
                (Some(k), _) if k == BigRational::from_integer(1.into()) => String::new(),
                (_, 1) => format!("{}*", Expr::from(&body)),
                _ => format!("({})*", Expr::from(&body)),
            };
            write!(f, "{sep}{coef}d{name}")?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
