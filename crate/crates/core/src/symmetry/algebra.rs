use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::VectorField;
use crate::error::{Error, Result};
use crate::expr::{Monomial, Poly, Symbol, Var};
use crate::linalg::{self, Matrix};
use crate::parser::CommutatorSpec;

type Key = (usize, Monomial);

fn keys<'a>(fields: impl IntoIterator<Item = &'a VectorField>) -> Vec<Key> {
    let mut out = BTreeSet::new();
    for f in fields {
        for (i, c) in f.components().enumerate() {
            out.extend(c.terms().map(|(m, _)| (i, m.clone())));
        }
    }
    out.into_iter().collect()
}

fn coefficient_vector(f: &VectorField, keys: &[Key]) -> Vec<BigRational> {
    let comps: Vec<&Poly> = f.components().collect();
    keys.iter()
        .map(|(i, m)| {
            comps[*i]
                .terms()
                .find(|(tm, _)| *tm == m)
                .map(|(_, c)| c.clone())
                .unwrap_or_else(BigRational::zero)
        })
        .collect()
}

/// Rows are the fields, columns the (component, monomial) pairs they use.
pub fn coefficient_matrix(fields: &[VectorField], extra: &[VectorField]) -> (Vec<Key>, Matrix) {
    let keys = keys(fields.iter().chain(extra));
    let rows = fields.iter().map(|f| coefficient_vector(f, &keys)).collect();
    let m = Matrix::from_rows(keys.len(), rows);
    (keys, m)
}

pub fn rank_of(fields: &[VectorField]) -> usize {
    linalg::rank(&coefficient_matrix(fields, &[]).1)
}

/// Exact span equality of two lists of fields.
pub fn same_span(a: &[VectorField], b: &[VectorField]) -> bool {
    let all: Vec<VectorField> = a.iter().chain(b).cloned().collect();
    let r = rank_of(&all);
    r == rank_of(a) && r == rank_of(b)
}

pub fn span_contains(basis: &[VectorField], f: &VectorField) -> bool {
    let mut all = basis.to_vec();
    all.push(f.clone());
    rank_of(&all) == rank_of(basis)
}

/// Coordinates of `f` in a linearly independent `basis`.
pub fn coordinates_in(basis: &[VectorField], f: &VectorField) -> Option<Vec<BigRational>> {
    let (keys, m) = coefficient_matrix(basis, std::slice::from_ref(f));
    let target = coefficient_vector(f, &keys);
    linalg::solve(&m.transpose(), &target)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Entry {
    /// Structure constants: `[V_i, V_j] = sum_k c_k V_k`.
    Combination(Vec<BigRational>),
    NotInSpan(VectorField),
}

impl Entry {
    pub fn coefficients(&self) -> Option<&[BigRational]> {
        match self {
            Entry::Combination(c) => Some(c),
            Entry::NotInSpan(_) => None,
        }
    }
}

/// Renders a combination of labelled basis elements, e.g. `-2*V2`.
pub fn format_combination(c: &[BigRational], labels: &[String]) -> String {
    let mut out = String::new();
    for (k, l) in c.iter().zip(labels) {
        if k.is_zero() {
            continue;
        }
        let neg = k.is_negative();
        let a = k.abs();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        if !a.is_one() {
            if a.is_integer() {
                out.push_str(&format!("{a}*"));
            } else {
                out.push_str(&format!("({a})*"));
            }
        }
        out.push_str(l);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

#[derive(Clone, Debug)]
pub struct CommutatorTable {
    pub labels: Vec<String>,
    pub basis: Vec<VectorField>,
    pub brackets: Vec<Vec<VectorField>>,
    pub entries: Vec<Vec<Entry>>,
}

impl fmt::Display for CommutatorTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<Vec<String>> = self
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| match e {
                        Entry::Combination(c) => format_combination(c, &self.labels),
                        Entry::NotInSpan(_) => "NOT-IN-SPAN".into(),
                    })
                    .collect()
            })
            .collect();
        let width = cells
            .iter()
            .flatten()
            .chain(&self.labels)
            .map(|s| s.chars().count())
            .max()
            .unwrap_or(1);
        let label_width = self.labels.iter().map(|s| s.chars().count()).max().unwrap_or(1);
        write!(f, "{:label_width$} |", "")?;
        for l in &self.labels {
            write!(f, " {l:>width$}")?;
        }
        writeln!(f)?;
        for (l, row) in self.labels.iter().zip(&cells) {
            write!(f, "{l:label_width$} |")?;
            for c in row {
                write!(f, " {c:>width$}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn commutator_table(labels: Vec<String>, basis: Vec<VectorField>) -> Result<CommutatorTable> {
    assert_eq!(labels.len(), basis.len());
    if rank_of(&basis) != basis.len() {
        return Err(Error::DependentBasis);
    }
    let brackets: Vec<Vec<VectorField>> = basis
        .iter()
        .map(|a| basis.iter().map(|b| a.commutator(b)).collect())
        .collect();
    let entries = brackets
        .iter()
        .map(|row| {
            row.iter()
                .map(|w| match coordinates_in(&basis, w) {
                    Some(c) => Entry::Combination(c),
                    None => Entry::NotInSpan(w.clone()),
                })
                .collect()
        })
        .collect();
    Ok(CommutatorTable {
        labels,
        basis,
        brackets,
        entries,
    })
}

impl CommutatorTable {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn closed(&self) -> bool {
        self.entries
            .iter()
            .flatten()
            .all(|e| matches!(e, Entry::Combination(_)))
    }

    /// `[V_i, V_j] + [V_j, V_i] = 0` for every pair, as exact fields.
    pub fn antisymmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (i..n).all(|j| self.brackets[i][j].add(&self.brackets[j][i]).is_zero()))
    }

    /// Jacobi identity on the fields themselves, for every triple.
    pub fn jacobi(&self) -> bool {
        let n = self.dim();
        let v = &self.basis;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let s = self.brackets[i][j]
                        .commutator(&v[k])
                        .add(&self.brackets[j][k].commutator(&v[i]))
                        .add(&self.brackets[k][i].commutator(&v[j]));
                    if !s.is_zero() {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Reads a reference table whose entries are linear combinations of the
/// field names.
pub fn reference_entries(spec: &CommutatorSpec, labels: &[String]) -> Result<Vec<Vec<Vec<BigRational>>>> {
    let vars: Vec<Var> = labels.iter().map(|l| Var::Sym(Symbol::new(l))).collect();
    let mut by_label: BTreeMap<&str, Vec<Vec<BigRational>>> = BTreeMap::new();
    for (label, row) in &spec.rows {
        let mut parsed = Vec::new();
        for e in row {
            let p = e.to_poly();
            let coeffs: Vec<BigRational> = vars
                .iter()
                .map(|v| p.diff(v).as_constant().unwrap_or_else(BigRational::zero))
                .collect();
            let rebuilt = vars
                .iter()
                .zip(&coeffs)
                .fold(Poly::zero(), |acc, (v, c)| acc + Poly::var(v.clone()).scale(c));
            if rebuilt != p {
                return Err(Error::Input(format!(
                    "commutator entry '{e}' in row {label} is not a linear combination of the fields"
                )));
            }
            parsed.push(coeffs);
        }
        by_label.insert(label.as_str(), parsed);
    }
    labels
        .iter()
        .map(|l| {
            by_label
                .remove(l.as_str())
                .ok_or_else(|| Error::Input(format!("commutator table has no row for {l}")))
        })
        .collect()
}

/// Whether a table of structure constants satisfies `c_ij = -c_ji`.
pub fn table_is_antisymmetric(entries: &[Vec<Vec<BigRational>>]) -> bool {
    let n = entries.len();
    (0..n).all(|i| (0..n).all(|j| entries[i][j].iter().zip(&entries[j][i]).all(|(a, b)| (a + b).is_zero())))
}

/// Cells `(i, j)` where the computed table differs from the reference.
pub fn table_mismatches(table: &CommutatorTable, reference: &[Vec<Vec<BigRational>>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, row) in table.entries.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if e.coefficients() != Some(reference[i][j].as_slice()) {
                out.push((i, j));
            }
        }
    }
    out
}
