use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use super::prolong::{apply_prolonged, prolong};
use super::VectorField;
use crate::error::{Error, Result};
use crate::expr::{JetCoordinate, Monomial, Poly, Symbol, Var};
use crate::linalg::{self, Matrix};
use crate::parser::AnsatzDegrees;

/// One unknown of the ansatz: a monomial in one infinitesimal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Column {
    /// Index into `xi_1, .., xi_n, phi`.
    pub component: usize,
    pub monomial: Poly,
    pub unknown: Symbol,
}

/// Polynomial ansatz for the infinitesimals: total degree at most
/// `independent` in the independent variables and at most `dependent` in u.
#[derive(Clone, Debug)]
pub struct Ansatz {
    independents: Vec<Symbol>,
    dependent: Symbol,
    degrees: AnsatzDegrees,
    columns: Vec<Column>,
}

fn exponent_vectors(nvars: usize, max_total: u32) -> Vec<Vec<u32>> {
    if nvars == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=max_total {
        for mut rest in exponent_vectors(nvars - 1, max_total - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl Ansatz {
    pub fn new(independents: Vec<Symbol>, dependent: Symbol, degrees: AnsatzDegrees) -> Self {
        let mut exps: Vec<Vec<u32>> = Vec::new();
        for base in exponent_vectors(independents.len(), degrees.independent) {
            for k in 0..=degrees.dependent {
                let mut e = base.clone();
                e.push(k);
                exps.push(e);
            }
        }
        exps.sort_by_key(|e| (e.iter().sum::<u32>(), Reverse(e.clone())));
        let vars: Vec<Poly> = independents
            .iter()
            .map(|s| Poly::var(s.clone()))
            .chain(std::iter::once(Poly::jet(JetCoordinate::base(dependent.clone()))))
            .collect();
        let labels: Vec<String> = independents
            .iter()
            .chain(std::iter::once(&dependent))
            .map(|s| s.name().to_uppercase())
            .collect();
        let mut columns = Vec::new();
        for (component, label) in labels.iter().enumerate() {
            for (i, e) in exps.iter().enumerate() {
                let monomial = vars
                    .iter()
                    .zip(e)
                    .fold(Poly::one(), |acc, (v, &k)| acc.mul(&v.pow_int(k)));
                columns.push(Column {
                    component,
                    monomial,
                    unknown: Symbol::new(&format!("k_{label}_{i}")),
                });
            }
        }
        Ansatz {
            independents,
            dependent,
            degrees,
            columns,
        }
    }

    pub fn degrees(&self) -> AnsatzDegrees {
        self.degrees
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    fn field(&self, mut coefficient: impl FnMut(usize) -> Poly) -> VectorField {
        let n = self.independents.len();
        let mut comps = vec![Poly::zero(); n + 1];
        for (j, c) in self.columns.iter().enumerate() {
            let k = coefficient(j);
            if !k.is_zero() {
                comps[c.component].add_assign(&k.mul(&c.monomial));
            }
        }
        let phi = comps.pop().expect("n + 1 components");
        VectorField::new(self.independents.clone(), self.dependent.clone(), comps, phi)
    }

    pub fn unit_field(&self, j: usize) -> VectorField {
        self.field(|i| if i == j { Poly::one() } else { Poly::zero() })
    }

    /// The field whose coefficients carry the unknown symbols.
    pub fn generic_field(&self) -> VectorField {
        self.field(|i| Poly::var(self.columns[i].unknown.clone()))
    }

    pub fn field_from(&self, v: &[BigRational]) -> VectorField {
        self.field(|i| Poly::constant(v[i].clone()))
    }

    /// Coordinates of `f` in the ansatz, or `None` if it lies outside.
    pub fn coordinates(&self, f: &VectorField) -> Option<Vec<BigRational>> {
        let mut out = vec![BigRational::zero(); self.len()];
        for (component, coef) in f.components().enumerate() {
            for (m, c) in coef.terms() {
                let j = self.columns.iter().position(|col| {
                    col.component == component && col.monomial.as_single_term().is_some_and(|(cm, _)| cm == m)
                })?;
                out[j] = c.clone();
            }
        }
        Some(out)
    }
}

/// `delta = kappa * leading + rest`, with `rest` free of `leading`.
#[derive(Clone, Debug)]
pub struct LeadingSplit {
    pub leading: JetCoordinate,
    pub kappa: Poly,
    pub rest: Poly,
}

impl LeadingSplit {
    pub fn new(delta: &Poly, leading: &JetCoordinate) -> Result<Self> {
        let var = Var::Jet(leading.clone());
        let coeffs = delta
            .coefficients_in(&var)
            .map_err(|_| Error::NotLinearInLeading(leading.to_string()))?;
        if coeffs.keys().any(|&d| d > 1) {
            return Err(Error::NotLinearInLeading(leading.to_string()));
        }
        let kappa = match coeffs.get(&1) {
            Some(k) if !k.is_zero() => k.clone(),
            _ => return Err(Error::LeadingAbsent(leading.to_string())),
        };
        let rest = coeffs.get(&0).cloned().unwrap_or_else(Poly::zero);
        Ok(LeadingSplit {
            leading: leading.clone(),
            kappa,
            rest,
        })
    }

    fn powers_in(&self, e: &Poly) -> Result<BTreeMap<u32, Poly>> {
        e.coefficients_in(&Var::Jet(self.leading.clone()))
            .map_err(|_| Error::NotLinearInLeading(self.leading.to_string()))
    }

    /// Substitutes `leading = -rest/kappa` and multiplies by `kappa^power`.
    /// `power` must be at least the degree of `e` in the leading coordinate.
    pub fn reduce_with_power(&self, e: &Poly, power: u32) -> Result<Poly> {
        let coeffs = self.powers_in(e)?;
        let neg_rest = -&self.rest;
        let mut out = Poly::zero();
        for (k, c) in coeffs {
            assert!(k <= power, "clearing power below degree");
            out.add_assign(&c.mul(&neg_rest.pow_int(k)).mul(&self.kappa.pow_int(power - k)));
        }
        Ok(out)
    }

    pub fn degree_in_leading(&self, e: &Poly) -> Result<u32> {
        Ok(self.powers_in(e)?.into_keys().next_back().unwrap_or(0))
    }
}

/// Eliminates `leading` from `e` using `delta = 0`; returns the cleared
/// polynomial and the power of the leading coefficient that was multiplied in.
pub fn on_manifold_reduce(e: &Poly, delta: &Poly, leading: &JetCoordinate) -> Result<(Poly, u32)> {
    let split = LeadingSplit::new(delta, leading)?;
    let power = split.degree_in_leading(e)?;
    Ok((split.reduce_with_power(e, power)?, power))
}

/// Rows are coefficients of the monomials of the reduced invariance
/// condition; columns are the ansatz unknowns.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub columns: Vec<Symbol>,
    pub rows: Vec<(Monomial, Vec<BigRational>)>,
    /// Power of the leading coefficient multiplied in to clear denominators.
    pub cleared_power: u32,
    pub kappa: Poly,
}

impl LinearSystem {
    pub fn matrix(&self) -> Matrix {
        Matrix::from_rows(self.columns.len(), self.rows.iter().map(|(_, r)| r.clone()).collect())
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }
}

fn lift(delta: &Poly, dependent: &Symbol) -> Poly {
    crate::expr::lift_dependent(delta, dependent)
}

/// Builds the determining system one ansatz column at a time: the invariance
/// condition is linear in the field, so column `j` is the reduced condition
/// for the `j`-th unit field.
pub fn determining_system(delta: &Poly, ansatz: &Ansatz, leading: &JetCoordinate) -> Result<LinearSystem> {
    let delta = lift(delta, &ansatz.dependent);
    let order = delta.jet_order().unwrap_or(0).max(1);
    let split = LeadingSplit::new(&delta, leading)?;
    let conditions: Vec<Poly> = (0..ansatz.len())
        .into_par_iter()
        .map(|j| {
            let pv = prolong(&ansatz.unit_field(j), order)?;
            Ok(apply_prolonged(&pv, &delta)?)
        })
        .collect::<Result<_>>()?;
    let power = conditions
        .iter()
        .map(|c| split.degree_in_leading(c))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    let reduced: Vec<Poly> = conditions
        .par_iter()
        .map(|c| split.reduce_with_power(c, power))
        .collect::<Result<_>>()?;
    let n = ansatz.len();
    let mut rows: BTreeMap<Monomial, Vec<BigRational>> = BTreeMap::new();
    for (j, r) in reduced.iter().enumerate() {
        for (m, c) in r.terms() {
            rows.entry(m.clone()).or_insert_with(|| vec![BigRational::zero(); n])[j] = c.clone();
        }
    }
    Ok(LinearSystem {
        columns: ansatz.columns.iter().map(|c| c.unknown.clone()).collect(),
        rows: rows.into_iter().collect(),
        cleared_power: power,
        kappa: split.kappa,
    })
}

/// Builds the same system from the generic field with symbolic unknowns,
/// collecting coefficients over every non-unknown variable.
pub fn determining_system_symbolic(delta: &Poly, ansatz: &Ansatz, leading: &JetCoordinate) -> Result<LinearSystem> {
    let delta = lift(delta, &ansatz.dependent);
    let order = delta.jet_order().unwrap_or(0).max(1);
    let pv = prolong(&ansatz.generic_field(), order)?;
    let condition = apply_prolonged(&pv, &delta)?;
    let (reduced, power) = on_manifold_reduce(&condition, &delta, leading)?;
    let unknowns: BTreeSet<Var> = ansatz.columns.iter().map(|c| Var::Sym(c.unknown.clone())).collect();
    let vars: BTreeSet<Var> = reduced.vars().into_iter().filter(|v| !unknowns.contains(v)).collect();
    let collected = reduced.collect(&vars)?;
    let mut rows = Vec::new();
    for (m, coeff) in collected {
        let mut row = vec![BigRational::zero(); ansatz.len()];
        for (j, col) in ansatz.columns.iter().enumerate() {
            let c = coeff.diff(&Var::Sym(col.unknown.clone()));
            if let Some(k) = c.as_constant() {
                row[j] = k;
            } else {
                return Err(Error::Input(format!(
                    "coefficient of {m} is not linear in the unknowns"
                )));
            }
        }
        rows.push((m, row));
    }
    let split = LeadingSplit::new(&delta, leading)?;
    Ok(LinearSystem {
        columns: ansatz.columns.iter().map(|c| c.unknown.clone()).collect(),
        rows,
        cleared_power: power,
        kappa: split.kappa,
    })
}

/// Exact nullspace of the system, mapped back to vector fields.
pub fn solve_nullspace(sys: &LinearSystem, ansatz: &Ansatz) -> Vec<VectorField> {
    linalg::nullspace(&sys.matrix())
        .iter()
        .map(|v| ansatz.field_from(v))
        .collect()
}

/// Whether `v` satisfies every row exactly.
pub fn back_substitutes(sys: &LinearSystem, v: &[BigRational]) -> bool {
    sys.rows.iter().all(|(_, r)| linalg::dot(r, v).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expression;

    fn p(s: &str) -> Poly {
        lift(&parse_expression(s).unwrap().to_poly(), &"u".into())
    }

    fn jet(index: &[&str]) -> JetCoordinate {
        JetCoordinate::new("u".into(), index.iter().map(|s| Symbol::new(s)))
    }

    #[test]
    fn ansatz_size_and_order() {
        let a = Ansatz::new(
            vec!["x".into(), "y".into(), "t".into()],
            "u".into(),
            AnsatzDegrees::default(),
        );
        assert_eq!(a.len(), 80);
        let first: Vec<String> = a.columns()[..6].iter().map(|c| c.monomial.to_string()).collect();
        assert_eq!(first, ["1", "x", "y", "t", "u", "x^2"]);
        assert_eq!(a.columns()[20].unknown.name(), "k_Y_0");
        let f = a.field_from(&(0..80).map(|i| BigRational::from_integer(i.into())).collect::<Vec<_>>());
        assert_eq!(a.coordinates(&f).unwrap()[17], BigRational::from_integer(17.into()));
    }

    #[test]
    fn leading_elimination() {
        let delta = p("u^3*D(u,x,y,t,t) - D(u,x)");
        let (r, k) = on_manifold_reduce(&p("D(u,x,y,t,t)"), &delta, &jet(&["x", "y", "t", "t"])).unwrap();
        assert_eq!((r, k), (p("D(u,x)"), 1));
        let (r, k) = on_manifold_reduce(&p("x*u"), &delta, &jet(&["x", "y", "t", "t"])).unwrap();
        assert_eq!((r, k), (p("x*u"), 0));
        assert!(matches!(
            on_manifold_reduce(&p("x"), &p("D(u,x)"), &jet(&["t"])),
            Err(Error::LeadingAbsent(_))
        ));
        assert!(matches!(
            on_manifold_reduce(&p("x"), &p("D(u,t)^2"), &jet(&["t"])),
            Err(Error::NotLinearInLeading(_))
        ));
    }

    #[test]
    fn transport_equation_translations() {
        let a = Ansatz::new(
            vec!["x".into(), "y".into(), "t".into()],
            "u".into(),
            AnsatzDegrees {
                independent: 1,
                dependent: 1,
            },
        );
        let sys = determining_system(&p("D(u,x)"), &a, &jet(&["x"])).unwrap();
        let ns = linalg::nullspace(&sys.matrix());
        let span = Matrix::from_rows(a.len(), ns);
        for name in ["y", "t"] {
            let comp = ["x", "y", "t"].iter().position(|v| *v == name).unwrap();
            let mut xi = vec![Poly::zero(); 3];
            xi[comp] = Poly::one();
            let f = VectorField::new(vec!["x".into(), "y".into(), "t".into()], "u".into(), xi, Poly::zero());
            let coords = a.coordinates(&f).unwrap();
            let mut stacked = span.clone();
            stacked.push_row(coords);
            assert_eq!(linalg::rank(&stacked), linalg::rank(&span));
        }
    }
}
