//! Linear algebra over exact rationals and floats.
//!
//! Two independent solvers live here:
//!
//! * [`bareiss_solve`], a dense fraction-free Gaussian elimination over big
//!   integers. It is used for small systems and as a cross-check.
//! * [`SparseSymmetric`], a sparse symmetric elimination with a greedy
//!   minimum-degree order, generic over [`Scalar`]. On a weighted Laplacian,
//!   eliminating a vertex is exactly the star-mesh transform, so the same
//!   routine computes Schur complements and solves grounded systems.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Field operations needed by the sparse eliminator.
pub trait Scalar: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn one() -> Self {
        Rational::one()
    }
    fn from_i64(v: i64) -> Self {
        Rational::from(v)
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Solves `A X = B` exactly for square `A` (n x n) and `B` (n x k) using
/// fraction-free (Bareiss) elimination on the integer-scaled augmented
/// matrix. Returns `X` as n rows of k entries.
pub fn bareiss_solve(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Result<Vec<Vec<Rational>>> {
    let n = a.len();
    if b.len() != n || a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument("bareiss_solve: dimension mismatch".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let k = b[0].len();
    if b.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidArgument("bareiss_solve: ragged right-hand side".into()));
    }

    // Clear denominators row by row; scaling a row does not change X.
    let mut m: Vec<Vec<BigInt>> = a
        .iter()
        .zip(b)
        .map(|(ra, rb)| {
            let lcm = ra.iter().chain(rb).fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            ra.iter().chain(rb).map(|x| x.numer() * (&lcm / x.denom())).collect()
        })
        .collect();

    let width = n + k;
    let mut prev = BigInt::one();
    for p in 0..n {
        let pivot_row = (p..n)
            .find(|&r| !m[r][p].is_zero())
            .ok_or_else(|| Error::Singular(format!("no pivot in column {p}")))?;
        m.swap(p, pivot_row);
        for r in p + 1..n {
            for c in p + 1..width {
                let v = &m[p][p] * &m[r][c] - &m[r][p] * &m[p][c];
                // Exact by Sylvester's identity.
                m[r][c] = v / &prev;
            }
            m[r][p] = BigInt::zero();
        }
        prev = m[p][p].clone();
    }

    let mut x = vec![vec![Rational::zero(); k]; n];
    for col in 0..k {
        for r in (0..n).rev() {
            let mut acc = Rational::from_integer(m[r][n + col].clone());
            for c in r + 1..n {
                if !m[r][c].is_zero() {
                    acc -= &(Rational::from_integer(m[r][c].clone()) * &x[c][col]);
                }
            }
            x[r][col] = acc / Rational::from_integer(m[r][r].clone());
        }
    }
    Ok(x)
}

/// Dense float solve with partial pivoting; used for cross-checks.
pub fn dense_solve_f64(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for p in 0..n {
        let piv = (p..n).max_by(|&i, &j| m[i][p].abs().total_cmp(&m[j][p].abs())).unwrap();
        if m[piv][p].abs() < 1e-300 {
            return Err(Error::Singular(format!("zero pivot in column {p}")));
        }
        m.swap(p, piv);
        for r in p + 1..n {
            let f = m[r][p] / m[p][p];
            if f != 0.0 {
                for c in p..=n {
                    m[r][c] -= f * m[p][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    Ok(x)
}

/// Sparse symmetric matrix stored as per-row ordered maps (diagonal
/// included). Entries that become exactly zero are dropped.
#[derive(Clone, Debug)]
pub struct SparseSymmetric<S> {
    rows: Vec<BTreeMap<usize, S>>,
}

struct Pivot<S> {
    index: usize,
    diag: S,
    row: Vec<(usize, S)>,
}

/// Outcome of a partial elimination: the Schur complement on the kept
/// indices plus the data needed for back-substitution.
pub struct Elimination<S> {
    remaining: SparseSymmetric<S>,
    rhs: Vec<S>,
    pivots: Vec<Pivot<S>>,
    kept: Vec<usize>,
}

impl<S: Scalar> SparseSymmetric<S> {
    pub fn new(n: usize) -> Self {
        SparseSymmetric {
            rows: vec![BTreeMap::new(); n],
        }
    }

    /// Weighted graph Laplacian from `(i, j, conductance)` triples;
    /// parallel entries accumulate.
    pub fn laplacian<'a, I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, &'a S)>,
        S: 'a,
    {
        let mut m = SparseSymmetric::new(n);
        for (i, j, c) in edges {
            if i == j || c.is_zero() {
                continue;
            }
            m.add_entry(i, i, c);
            m.add_entry(j, j, c);
            let neg = S::zero().sub(c);
            m.add_entry(i, j, &neg);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` at `(i, j)` and, off the diagonal, at `(j, i)`.
    pub fn add_entry(&mut self, i: usize, j: usize, v: &S) {
        self.add_one(i, j, v);
        if i != j {
            self.add_one(j, i, v);
        }
    }

    fn add_one(&mut self, i: usize, j: usize, v: &S) {
        let entry = self.rows[i].entry(j).or_insert_with(S::zero);
        *entry = entry.add(v);
        if entry.is_zero() {
            self.rows[i].remove(&j);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.rows[i].get(&j).cloned().unwrap_or_else(S::zero)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, &S)> {
        self.rows[i].iter().map(|(&j, v)| (j, v))
    }

    /// Restriction to `indices` (in that order).
    pub fn submatrix(&self, indices: &[usize]) -> SparseSymmetric<S> {
        let mut pos = vec![usize::MAX; self.dim()];
        for (k, &i) in indices.iter().enumerate() {
            pos[i] = k;
        }
        let mut out = SparseSymmetric::new(indices.len());
        for (k, &i) in indices.iter().enumerate() {
            for (&j, v) in &self.rows[i] {
                if pos[j] != usize::MAX {
                    out.rows[k].insert(pos[j], v.clone());
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        self.rows
            .iter()
            .map(|row| row.iter().fold(S::zero(), |acc, (&j, v)| acc.add(&v.mul(&x[j]))))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<S>> {
        let n = self.dim();
        let mut d = vec![vec![S::zero(); n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for (&j, v) in row {
                d[i][j] = v.clone();
            }
        }
        d
    }

    /// Eliminates every index with `keep[i] == false`, greedily choosing the
    /// one of smallest current degree. `rhs` is carried along.
    pub fn eliminate(mut self, keep: &[bool], mut rhs: Vec<S>) -> Result<Elimination<S>> {
        let n = self.dim();
        assert_eq!(keep.len(), n);
        assert_eq!(rhs.len(), n);
        let degree = |m: &SparseSymmetric<S>, v: usize| m.rows[v].len();
        let mut queue: BTreeSet<(usize, usize)> = (0..n).filter(|&v| !keep[v]).map(|v| (degree(&self, v), v)).collect();
        let mut current_degree: Vec<usize> = (0..n).map(|v| degree(&self, v)).collect();
        let mut eliminated = vec![false; n];
        let mut pivots = Vec::with_capacity(queue.len());

        while let Some((_, v)) = queue.pop_first() {
            let row = std::mem::take(&mut self.rows[v]);
            let diag = row
                .get(&v)
                .cloned()
                .filter(|d| !d.is_zero())
                .ok_or_else(|| Error::Singular(format!("zero pivot at index {v}")))?;
            let others: Vec<(usize, S)> = row.into_iter().filter(|&(j, _)| j != v).collect();
            for (j, _) in &others {
                self.rows[*j].remove(&v);
            }
            let rhs_v = rhs[v].clone();
            for (a, (j, a_jv)) in others.iter().enumerate() {
                let factor = a_jv.div(&diag);
                if !rhs_v.is_zero() {
                    rhs[*j] = rhs[*j].sub(&factor.mul(&rhs_v));
                }
                // Symmetric update; each unordered pair handled once.
                for (k, a_vk) in &others[a..] {
                    let delta = S::zero().sub(&factor.mul(a_vk));
                    self.add_entry(*j, *k, &delta);
                }
            }
            for (j, _) in &others {
                if !keep[*j] && !eliminated[*j] {
                    let d = degree(&self, *j);
                    if d != current_degree[*j] {
                        queue.remove(&(current_degree[*j], *j));
                        queue.insert((d, *j));
                        current_degree[*j] = d;
                    }
                }
            }
            eliminated[v] = true;
            pivots.push(Pivot {
                index: v,
                diag,
                row: others,
            });
        }

        let kept: Vec<usize> = (0..n).filter(|&v| keep[v]).collect();
        Ok(Elimination {
            remaining: self,
            rhs,
            pivots,
            kept,
        })
    }

    /// Solves `self * x = rhs` by eliminating every index.
    pub fn solve(self, rhs: Vec<S>) -> Result<Vec<S>> {
        let n = self.dim();
        let elim = self.eliminate(&vec![false; n], rhs)?;
        Ok(elim.back_substitute(&[]))
    }
}

impl<S: Scalar> Elimination<S> {
    /// Indices that were not eliminated, ascending.
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    /// Schur complement restricted to the kept indices, in `kept()` order.
    pub fn schur_dense(&self) -> Vec<Vec<S>> {
        self.remaining.submatrix(&self.kept).to_dense()
    }

    /// Reduced right-hand side on the kept indices.
    pub fn reduced_rhs(&self) -> Vec<S> {
        self.kept.iter().map(|&i| self.rhs[i].clone()).collect()
    }

    /// Recovers the full solution given values on the kept indices
    /// (in `kept()` order).
    pub fn back_substitute(&self, kept_values: &[S]) -> Vec<S> {
        assert_eq!(kept_values.len(), self.kept.len());
        let n = self.remaining.dim();
        let mut x = vec![S::zero(); n];
        for (&i, v) in self.kept.iter().zip(kept_values) {
            x[i] = v.clone();
        }
        for p in self.pivots.iter().rev() {
            let acc = p
                .row
                .iter()
                .fold(self.rhs[p.index].clone(), |acc, (j, a)| acc.sub(&a.mul(&x[*j])));
            x[p.index] = acc.div(&p.diag);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn bareiss_small_system() {
        // 2x + y = 3, x + 3y = 5  ->  x = 4/5, y = 7/5
        let a = vec![vec![q(2, 1), q(1, 1)], vec![q(1, 1), q(3, 1)]];
        let b = vec![vec![q(3, 1)], vec![q(5, 1)]];
        let x = bareiss_solve(&a, &b).unwrap();
        assert_eq!(x, vec![vec![q(4, 5)], vec![q(7, 5)]]);
    }

    #[test]
    fn bareiss_needs_pivoting_and_rational_entries() {
        let a = vec![
            vec![q(0, 1), q(1, 2), q(1, 1)],
            vec![q(1, 3), q(0, 1), q(2, 1)],
            vec![q(1, 1), q(1, 1), q(0, 1)],
        ];
        let x_true = vec![q(1, 7), q(-2, 3), q(5, 2)];
        let b: Vec<Vec<Rational>> = a
            .iter()
            .map(|row| vec![row.iter().zip(&x_true).map(|(r, x)| r * x).sum()])
            .collect();
        let x = bareiss_solve(&a, &b).unwrap();
        let x: Vec<Rational> = x.into_iter().map(|r| r[0].clone()).collect();
        assert_eq!(x, x_true);
    }

    #[test]
    fn bareiss_singular() {
        let a = vec![vec![q(1, 1), q(2, 1)], vec![q(2, 1), q(4, 1)]];
        let b = vec![vec![q(1, 1)], vec![q(2, 1)]];
        assert!(matches!(bareiss_solve(&a, &b), Err(Error::Singular(_))));
    }

    #[test]
    fn star_elimination_is_y_delta() {
        // Hub 0 joined to leaves 1, 2, 3 with conductances 1, 2, 3.
        let c = [q(1, 1), q(2, 1), q(3, 1)];
        let edges: Vec<(usize, usize, &Rational)> = (0..3).map(|i| (0, i + 1, &c[i])).collect();
        let lap = SparseSymmetric::laplacian(4, edges);
        let elim = lap
            .eliminate(&[false, true, true, true], vec![Rational::zero(); 4])
            .unwrap();
        let s = elim.schur_dense();
        // c_ij = c_i c_j / sum c
        assert_eq!(s[0][1], -q(2, 6));
        assert_eq!(s[0][2], -q(3, 6));
        assert_eq!(s[1][2], -q(6, 6));
        assert_eq!(s[0][0], q(2 + 3, 6));
    }

    #[test]
    fn singular_pivot_reported() {
        let m: SparseSymmetric<Rational> = SparseSymmetric::new(2);
        assert!(matches!(
            m.solve(vec![Rational::one(), Rational::one()]),
            Err(Error::Singular(_))
        ));
    }

    fn random_spd(n: usize, seed: &[i64]) -> (SparseSymmetric<Rational>, Vec<Vec<Rational>>) {
        // Laplacian of a path plus random chords, plus a positive diagonal shift.
        let mut m = SparseSymmetric::new(n);
        let mut k = 0;
        let mut next = || {
            k += 1;
            seed[k % seed.len()]
        };
        for i in 0..n {
            let shift = Rational::ratio(next().rem_euclid(3) + 1, 2);
            m.add_entry(i, i, &shift);
        }
        for i in 1..n {
            let c = Rational::ratio(next().rem_euclid(5) + 1, next().rem_euclid(4) + 1);
            m.add_entry(i - 1, i - 1, &c);
            m.add_entry(i, i, &c);
            m.add_entry(i - 1, i, &-&c);
            let j = (next().rem_euclid(i as i64)) as usize;
            if j + 1 < i {
                let c = Rational::ratio(next().rem_euclid(3) + 1, 3);
                m.add_entry(j, j, &c);
                m.add_entry(i, i, &c);
                m.add_entry(j, i, &-&c);
            }
        }
        let d = m.to_dense();
        (m, d)
    }

    proptest! {
        #[test]
        fn sparse_and_bareiss_agree(seed in prop::collection::vec(-50i64..50, 8..20), n in 2usize..9) {
            let (m, dense) = random_spd(n, &seed);
            let rhs: Vec<Rational> = (0..n).map(|i| Rational::ratio(seed[i % seed.len()], 7)).collect();
            let x_sparse = m.clone().solve(rhs.clone()).unwrap();
            let b: Vec<Vec<Rational>> = rhs.iter().map(|r| vec![r.clone()]).collect();
            let x_dense: Vec<Rational> = bareiss_solve(&dense, &b).unwrap().into_iter().map(|r| r[0].clone()).collect();
            prop_assert_eq!(&x_sparse, &x_dense);
            prop_assert_eq!(m.mul_vec(&x_sparse), rhs);
        }

        #[test]
        fn float_sparse_matches_dense(seed in prop::collection::vec(-50i64..50, 8..20), n in 2usize..9) {
            let (m, dense) = random_spd(n, &seed);
            let mf: SparseSymmetric<f64> = {
                let mut f = SparseSymmetric::new(n);
                for i in 0..n {
                    for (j, v) in m.row(i) {
                        if j >= i {
                            f.add_entry(i, j, &v.to_f64());
                        }
                    }
                }
                f
            };
            let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
            let xs = mf.solve(rhs.clone()).unwrap();
            let df: Vec<Vec<f64>> = dense.iter().map(|r| r.iter().map(Rational::to_f64).collect()).collect();
            let xd = dense_solve_f64(&df, &rhs).unwrap();
            for (a, b) in xs.iter().zip(&xd) {
                prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
            }
        }
    }
}
