//! Seeded randomized checks of the algebraic invariants the engine relies
//! on. Each case draws from its own stream, so suites run in parallel and
//! still reproduce exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::expr::{lift_dependent, EvalMode, EvaluationPoint, Exponent, Expr, JetSpace, Poly, Symbol};
use crate::linalg::{self, Matrix};
use crate::parser::parse_expression;
use crate::sampling;

const SYMBOLS: [&str; 4] = ["x", "y", "t", "a"];
const INDEPENDENTS: [&str; 3] = ["x", "y", "t"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Index and description of the first failing case.
    pub first_failure: Option<(usize, String)>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn small_rational(rng: &mut ChaCha8Rng) -> BigRational {
    BigRational::new(BigInt::from(rng.gen_range(-5..=5)), BigInt::from(rng.gen_range(1..=4)))
}

fn exponent(rng: &mut ChaCha8Rng) -> Exponent {
    const CHOICES: [(i64, i64); 7] = [(2, 1), (3, 1), (-1, 1), (-2, 1), (1, 2), (-1, 2), (3, 2)];
    let (n, d) = CHOICES[rng.gen_range(0..CHOICES.len())];
    Exponent::new(n, d)
}

fn leaf(rng: &mut ChaCha8Rng, jets: bool) -> Expr {
    match rng.gen_range(0..if jets { 4 } else { 3 }) {
        0 => Expr::Rational(small_rational(rng)),
        1 | 2 => Expr::sym(SYMBOLS[rng.gen_range(0..SYMBOLS.len())]),
        _ => {
            let order = rng.gen_range(1..=2);
            let index: Vec<&str> = (0..order).map(|_| INDEPENDENTS[rng.gen_range(0..3)]).collect();
            Expr::jet("u", &index)
        }
    }
}

/// A random tree over `x, y, t, a` and, when `jets` is set, derivatives of
/// `u` of order one and two.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32, jets: bool) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return leaf(rng, jets);
    }
    match rng.gen_range(0..10) {
        0..=3 => Expr::Sum(
            (0..rng.gen_range(2..=3))
                .map(|_| random_expr(rng, depth - 1, jets))
                .collect(),
        ),
        4..=6 => Expr::Product(
            (0..rng.gen_range(2..=3))
                .map(|_| random_expr(rng, depth - 1, jets))
                .collect(),
        ),
        7 | 8 => random_expr(rng, depth - 1, jets).pow(exponent(rng)),
        _ => random_expr(rng, depth - 1, jets).exp(),
    }
}

fn point(rng: &mut ChaCha8Rng, e: &Poly) -> EvaluationPoint {
    let mut p = EvaluationPoint::new();
    for v in e.vars() {
        p.set_f64(v, sampling::float_in(rng, 0.5, 1.5));
    }
    p
}

fn suite<F>(name: &'static str, seed: u64, cases: usize, check: F) -> SuiteResult
where
    F: Fn(&mut ChaCha8Rng) -> Result<(), String> + Sync,
{
    let outcomes: Vec<Result<(), String>> = (0..cases)
        .into_par_iter()
        .map(|i| check(&mut sampling::stream(seed, &format!("{name}/{i}"))))
        .collect();
    let first_failure = outcomes
        .iter()
        .enumerate()
        .find_map(|(i, r)| r.as_ref().err().map(|e| (i, e.clone())));
    SuiteResult {
        name,
        cases,
        failures: outcomes.iter().filter(|r| r.is_err()).count(),
        first_failure,
    }
}

pub fn normalization_idempotence(seed: u64, cases: usize) -> SuiteResult {
    suite("normalization-idempotence", seed, cases, |rng| {
        let e = random_expr(rng, 4, true);
        let once = e.normalize();
        let twice = once.normalize();
        if once == twice {
            Ok(())
        } else {
            Err(format!("{e}: {once} vs {twice}"))
        }
    })
}

/// Draws until both evaluations succeed, so every case compares numbers.
pub fn eval_consistency(seed: u64, cases: usize) -> SuiteResult {
    suite("eval-consistency", seed, cases, |rng| {
        for _ in 0..100 {
            let e = random_expr(rng, 3, true);
            let p = e.to_poly();
            let at = point(rng, &lift_dependent(&p, &Symbol::new("u")));
            let (Ok(a), Ok(b), Ok(scale)) = (e.eval(&at, EvalMode::Float), p.eval_f64(&at), p.term_scale(&at)) else {
                continue;
            };
            let a = a.to_f64();
            return if (a - b).abs() <= 1e-9 * a.abs().max(scale).max(1.0) {
                Ok(())
            } else {
                Err(format!("{e}: tree {a}, normal form {b}"))
            };
        }
        Err("no evaluable expression in 100 draws".into())
    })
}

pub fn product_rule(seed: u64, cases: usize) -> SuiteResult {
    suite("product-rule", seed, cases, |rng| {
        let f = random_expr(rng, 3, true).to_poly();
        let g = random_expr(rng, 3, true).to_poly();
        let s = Symbol::new(INDEPENDENTS[rng.gen_range(0..3)]);
        let lhs = f.mul(&g).diff_sym(&s);
        let rhs = &f.diff_sym(&s).mul(&g) + &f.mul(&g.diff_sym(&s));
        if lhs == rhs {
            Ok(())
        } else {
            Err(format!("d/d{s} of ({f})*({g})"))
        }
    })
}

pub fn total_derivative_commutativity(seed: u64, cases: usize) -> SuiteResult {
    let space = JetSpace::new(
        Symbol::new("u"),
        INDEPENDENTS.iter().map(|s| Symbol::new(s)).collect(),
        6,
    );
    suite("total-derivative-commutativity", seed, cases, move |rng| {
        let f = space.lift(&random_expr(rng, 3, true).to_poly());
        let a = Symbol::new(INDEPENDENTS[rng.gen_range(0..3)]);
        let b = Symbol::new(INDEPENDENTS[rng.gen_range(0..3)]);
        let ab = space
            .total_derivative_multi(&f, &[a.clone(), b.clone()])
            .map_err(|e| e.to_string())?;
        let ba = space
            .total_derivative_multi(&f, &[b.clone(), a.clone()])
            .map_err(|e| e.to_string())?;
        if ab == ba {
            Ok(())
        } else {
            Err(format!("D{a} D{b} of {f}"))
        }
    })
}

pub fn print_parse_round_trip(seed: u64, cases: usize) -> SuiteResult {
    suite("print-parse-round-trip", seed, cases, |rng| {
        let p = random_expr(rng, 4, true).to_poly();
        let text = p.to_string();
        let back = parse_expression(&text).map_err(|e| format!("{text}: {e}"))?.to_poly();
        if back == p {
            Ok(())
        } else {
            Err(format!("{text} re-reads as {back}"))
        }
    })
}

/// Textbook Gauss-Jordan elimination over the rationals, pivoting on the
/// first nonzero entry. Returns the nonzero rows and pivot columns.
pub fn naive_rref(mut rows: Vec<Vec<BigRational>>, ncols: usize) -> (Vec<Vec<BigRational>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        let pivot = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let k = row[c].clone();
                for (x, p) in row.iter_mut().zip(&pivot) {
                    *x -= &k * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

pub fn random_matrix(rng: &mut ChaCha8Rng) -> Matrix {
    let nrows = rng.gen_range(1..=6);
    let ncols = rng.gen_range(1..=6);
    let rows = (0..nrows)
        .map(|_| {
            (0..ncols)
                .map(|_| {
                    if rng.gen_bool(0.4) {
                        BigRational::zero()
                    } else {
                        small_rational(rng)
                    }
                })
                .collect()
        })
        .collect();
    let mut m = Matrix::from_rows(ncols, rows);
    if rng.gen_bool(0.3) && m.nrows() > 1 {
        let k = small_rational(rng);
        let combo: Vec<BigRational> = m.row(0).iter().zip(m.row(1)).map(|(a, b)| a + &k * b).collect();
        m.push_row(combo);
    }
    m
}

pub fn nullspace_against_naive(seed: u64, cases: usize) -> SuiteResult {
    suite("nullspace-vs-naive-rref", seed, cases, |rng| {
        let m = random_matrix(rng);
        let ns = linalg::nullspace(&m);
        for v in &ns {
            if m.mul_vec(v).iter().any(|x| !x.is_zero()) {
                return Err(format!("{m:?}: {v:?} is not in the kernel"));
            }
            if v.iter().find(|x| !x.is_zero()) != Some(&BigRational::one()) {
                return Err(format!("{m:?}: {v:?} is not normalized"));
            }
        }
        let (rows, pivots) = naive_rref(m.rows().to_vec(), m.ncols());
        let ours = linalg::rref(&m);
        if ours.pivots != pivots || ours.matrix.rows() != rows.as_slice() {
            return Err(format!("{m:?}: RREF differs from the naive elimination"));
        }
        if ns.len() + pivots.len() != m.ncols() {
            return Err(format!("{m:?}: nullity {} with rank {}", ns.len(), pivots.len()));
        }
        let (basis, _) = naive_rref(ns.clone(), m.ncols());
        if basis != ns {
            return Err(format!("{m:?}: nullspace basis is not in reduced echelon form"));
        }
        Ok(())
    })
}

/// Every suite with `cases` cases each.
pub fn all(seed: u64, cases: usize) -> Vec<SuiteResult> {
    vec![
        normalization_idempotence(seed, cases),
        eval_consistency(seed, cases),
        product_rule(seed, cases),
        total_derivative_commutativity(seed, cases),
        print_parse_round_trip(seed, cases),
        nullspace_against_naive(seed, cases),
    ]
}
