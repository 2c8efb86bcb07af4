//! Exact linear algebra over the rationals.
//!
//! Elimination runs on integer rows, each kept primitive (content 1), and
//! only converts back to rationals once the echelon form is known.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense rational matrix with a fixed column count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    ncols: usize,
    rows: Vec<Vec<BigRational>>,
}

impl Matrix {
    pub fn new(ncols: usize) -> Self {
        Matrix {
            ncols,
            rows: Vec::new(),
        }
    }

    pub fn from_rows(ncols: usize, rows: Vec<Vec<BigRational>>) -> Self {
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged matrix");
        Matrix { ncols, rows }
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            BigRational::one()
                        } else {
                            BigRational::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Matrix { ncols: n, rows }
    }

    pub fn push_row(&mut self, row: Vec<BigRational>) {
        assert_eq!(row.len(), self.ncols, "row length");
        self.rows.push(row);
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.rows[i]
    }

    pub fn transpose(&self) -> Matrix {
        let rows = (0..self.ncols)
            .map(|j| self.rows.iter().map(|r| r[j].clone()).collect())
            .collect();
        Matrix {
            ncols: self.rows.len(),
            rows,
        }
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(v.len(), self.ncols);
        self.rows.iter().map(|r| dot(r, v)).collect()
    }
}

pub fn dot(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub matrix: Matrix,
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

fn primitive(row: &[BigRational]) -> Vec<BigInt> {
    let lcm = row
        .iter()
        .filter(|c| !c.is_zero())
        .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let ints: Vec<BigInt> = row.iter().map(|c| c.numer() * (&lcm / c.denom())).collect();
    normalize_content(ints)
}

fn normalize_content(mut row: Vec<BigInt>) -> Vec<BigInt> {
    let g = row.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    if !g.is_zero() && !g.is_one() {
        for c in &mut row {
            *c /= &g;
        }
    }
    row
}

/// Integer echelon basis built one row at a time. Keeps every stored row
/// fully reduced against the others, so the final form is the RREF up to
/// row scaling.
#[derive(Clone, Debug)]
pub struct Echelon {
    ncols: usize,
    rows: Vec<(usize, Vec<BigInt>)>,
}

impl Echelon {
    pub fn new(ncols: usize) -> Self {
        Echelon {
            ncols,
            rows: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, mut row: Vec<BigInt>) -> Vec<BigInt> {
        for (p, prow) in &self.rows {
            if row[*p].is_zero() {
                continue;
            }
            let a = &prow[*p];
            let g = a.gcd(&row[*p]);
            let ka = a / &g;
            let kr = &row[*p] / &g;
            for (c, pc) in row.iter_mut().zip(prow) {
                *c = &*c * &ka - &kr * pc;
            }
            row = normalize_content(row);
        }
        row
    }

    /// Adds a row; returns whether it increased the rank.
    pub fn insert(&mut self, row: &[BigRational]) -> bool {
        assert_eq!(row.len(), self.ncols, "row length");
        let row = self.reduce(primitive(row));
        let Some(p) = row.iter().position(|c| !c.is_zero()) else {
            return false;
        };
        let row = if row[p].is_negative() {
            row.into_iter().map(|c| -c).collect()
        } else {
            row
        };
        for (_, other) in &mut self.rows {
            if other[p].is_zero() {
                continue;
            }
            let g = row[p].gcd(&other[p]);
            let ka = &row[p] / &g;
            let ko = &other[p] / &g;
            let reduced: Vec<BigInt> = other.iter().zip(&row).map(|(o, r)| o * &ka - &ko * r).collect();
            let mut reduced = normalize_content(reduced);
            let lead = reduced.iter().find(|c| !c.is_zero()).cloned();
            if lead.is_some_and(|l| l.is_negative()) {
                reduced.iter_mut().for_each(|c| *c = -&*c);
            }
            *other = reduced;
        }
        let at = self.rows.partition_point(|(q, _)| *q < p);
        self.rows.insert(at, (p, row));
        true
    }

    /// Whether `row` lies in the current row space.
    pub fn contains(&self, row: &[BigRational]) -> bool {
        self.reduce(primitive(row)).iter().all(Zero::is_zero)
    }

    pub fn into_rref(self) -> Rref {
        let mut pivots = Vec::with_capacity(self.rows.len());
        let mut rows = Vec::with_capacity(self.rows.len());
        for (p, r) in self.rows {
            let lead = r[p].clone();
            rows.push(r.into_iter().map(|c| BigRational::new(c, lead.clone())).collect());
            pivots.push(p);
        }
        Rref {
            matrix: Matrix {
                ncols: self.ncols,
                rows,
            },
            pivots,
        }
    }
}

pub fn rref(m: &Matrix) -> Rref {
    let mut e = Echelon::new(m.ncols);
    for r in &m.rows {
        e.insert(r);
    }
    e.into_rref()
}

pub fn rank(m: &Matrix) -> usize {
    rref(m).rank()
}

fn nullspace_of_rref(r: &Rref) -> Vec<Vec<BigRational>> {
    let n = r.matrix.ncols;
    let mut out = Vec::new();
    for f in (0..n).filter(|c| !r.pivots.contains(c)) {
        let mut v = vec![BigRational::zero(); n];
        v[f] = BigRational::one();
        for (row, &p) in r.matrix.rows.iter().zip(&r.pivots) {
            v[p] = -row[f].clone();
        }
        out.push(v);
    }
    out
}

/// Basis of `{v : m v = 0}` in reduced echelon form: the basis is unique
/// for the subspace and each vector's first nonzero entry is 1.
pub fn nullspace(m: &Matrix) -> Vec<Vec<BigRational>> {
    let basis = nullspace_of_rref(&rref(m));
    let n = m.ncols;
    rref(&Matrix::from_rows(n, basis)).matrix.rows
}

/// One solution of `m x = b`, or `None` when the system is inconsistent.
pub fn solve(m: &Matrix, b: &[BigRational]) -> Option<Vec<BigRational>> {
    assert_eq!(b.len(), m.nrows());
    let n = m.ncols;
    let augmented = Matrix::from_rows(
        n + 1,
        m.rows
            .iter()
            .zip(b)
            .map(|(r, bi)| r.iter().cloned().chain([bi.clone()]).collect())
            .collect(),
    );
    let r = rref(&augmented);
    if r.pivots.contains(&n) {
        return None;
    }
    let mut x = vec![BigRational::zero(); n];
    for (row, &p) in r.matrix.rows.iter().zip(&r.pivots) {
        x[p] = row[n].clone();
    }
    Some(x)
}

/// Whether the row spaces of `a` and `b` coincide.
pub fn same_row_space(a: &Matrix, b: &Matrix) -> bool {
    a.ncols == b.ncols && rref(a) == rref(b)
}
