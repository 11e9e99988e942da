//! Small dense linear algebra and integer combinatorics.
//!
//! Every instance handled by this crate is desk scale (ambient dimension up to
//! about ten), so rank decisions go through a full SVD with a relative cutoff:
//! singular values below `tol * sigma_max` count as zero.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Default relative rank tolerance.
pub const RANK_TOL: f64 = 1e-9;

/// Largest `n` accepted by the partition routines.
pub const MAX_PARTITION_N: usize = 20;

/// A linear subspace of `R^n`, stored as an orthonormal basis (one column per
/// direction). The zero subspace has a basis with no columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Matrix,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Self {
            basis: Matrix::zeros(n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            basis: Matrix::identity(n, n),
        }
    }

    /// Column space of `m`, orthonormalized.
    pub fn span_of(m: &Matrix, tol: f64) -> Self {
        column_space(m, tol)
    }

    /// Span of a list of vectors in `R^n`.
    pub fn span_of_vectors(n: usize, vectors: &[Vector], tol: f64) -> Self {
        if vectors.is_empty() {
            return Self::zero(n);
        }
        let m = Matrix::from_columns(vectors);
        column_space(&m, tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vector> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    /// Orthogonal projector `B B^T`.
    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }

    pub fn project(&self, x: &Vector) -> Vector {
        &self.basis * (self.basis.transpose() * x)
    }

    /// The point with the given coordinates in the stored basis.
    pub fn point(&self, coords: &[f64]) -> Vector {
        debug_assert_eq!(coords.len(), self.dim());
        &self.basis * DVector::from_column_slice(coords)
    }

    /// Euclidean distance from `x` to the subspace.
    pub fn distance(&self, x: &Vector) -> f64 {
        (x - self.project(x)).norm()
    }

    /// `x` lies in the subspace up to `tol * max(1, |x|_2)`.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        self.distance(x) <= tol * x.norm().max(1.0)
    }

    pub fn contains_subspace(&self, other: &Subspace, tol: f64) -> bool {
        other
            .basis
            .column_iter()
            .all(|c| self.contains(&c.into_owned(), tol))
    }

    /// Equality by mutual containment; bases are not canonical.
    pub fn approx_eq(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient_dim() == other.ambient_dim()
            && self.dim() == other.dim()
            && self.contains_subspace(other, tol)
            && other.contains_subspace(self, tol)
    }
}

fn sigma_cutoff(values: &DVector<f64>, tol: f64) -> f64 {
    let max = values.iter().cloned().fold(0.0_f64, f64::max);
    tol * max
}

/// Orthonormal basis of the column space of `m`.
pub fn column_space(m: &Matrix, tol: f64) -> Subspace {
    let n = m.nrows();
    if m.ncols() == 0 || m.iter().all(|v| *v == 0.0) {
        return Subspace::zero(n);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let cut = sigma_cutoff(&svd.singular_values, tol);
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > cut)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        Subspace::zero(n)
    } else {
        Subspace {
            basis: Matrix::from_columns(&cols),
        }
    }
}

/// Orthonormal basis of `{x : M x = 0}` with singular values below
/// `tol * sigma_max` treated as zero. A zero matrix yields the full space.
pub fn nullspace(m: &Matrix, tol: f64) -> Subspace {
    let n = m.ncols();
    if m.nrows() == 0 || m.iter().all(|v| *v == 0.0) {
        return Subspace::full(n);
    }
    // Pad to at least n rows so the SVD returns the full right singular basis.
    let rows = m.nrows().max(n);
    let mut padded = Matrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let cut = sigma_cutoff(&svd.singular_values, tol);
    let cols: Vec<Vector> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s <= cut)
        .map(|(i, _)| v_t.row(i).transpose().into_owned())
        .collect();
    if cols.is_empty() {
        Subspace::zero(n)
    } else {
        Subspace {
            basis: Matrix::from_columns(&cols),
        }
    }
}

/// Basis of `s1 ∩ s2`: the common nullspace of the two complementary projectors.
pub fn intersect(s1: &Subspace, s2: &Subspace, tol: f64) -> Result<Subspace> {
    let n = s1.ambient_dim();
    if s2.ambient_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: s2.ambient_dim(),
        });
    }
    if s1.dim() == 0 || s2.dim() == 0 {
        return Ok(Subspace::zero(n));
    }
    let eye = Matrix::identity(n, n);
    let c1 = &eye - s1.projector();
    let c2 = &eye - s2.projector();
    let mut stacked = Matrix::zeros(2 * n, n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&c1);
    stacked.view_mut((n, 0), (n, n)).copy_from(&c2);
    Ok(nullspace(&stacked, tol))
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

fn check_partition_n(n: usize) -> Result<()> {
    if (1..=MAX_PARTITION_N).contains(&n) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 1,
            max: MAX_PARTITION_N,
        })
    }
}

/// The set of `lcm(parts)` over all integer partitions of `n`, i.e. the orders
/// of permutations on `n` letters.
pub fn partitions_lcm_set(n: usize) -> Result<BTreeSet<u64>> {
    check_partition_n(n)?;
    let mut out = BTreeSet::new();
    // Parts are generated in non-increasing order; `acc` carries the lcm so far.
    fn walk(remaining: usize, max_part: usize, acc: u64, out: &mut BTreeSet<u64>) {
        if remaining == 0 {
            out.insert(acc);
            return;
        }
        for part in (1..=remaining.min(max_part)).rev() {
            walk(remaining - part, part, lcm(acc, part as u64), out);
        }
    }
    walk(n, n, 1, &mut out);
    Ok(out)
}

/// Landau's function: the largest order of a permutation on `n` letters.
pub fn landau(n: usize) -> Result<u64> {
    Ok(*partitions_lcm_set(n)?
        .iter()
        .next_back()
        .expect("every n >= 1 has a partition"))
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        // acc * (n - i) / (i + 1) stays exact; bail out once past u64 range.
        acc = acc * (n as u128 - i) / (i + 1);
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// `2^n`, saturating at `u64::MAX`.
pub fn pow2(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        1u64 << n
    }
}

/// `max_k 2^n C(n, k)`, the best known bound on periods of ∞-norm
/// nonexpansive maps on `R^n`. Saturates at `u64::MAX`.
pub fn best_known_period_bound(n: usize) -> u64 {
    pow2(n).saturating_mul(binomial(n as u64, n as u64 / 2))
}

/// Smallest number of letters carrying a permutation of order `q`: the sum
/// of the prime powers in the factorization of `q` (0 for `q = 1`).
pub fn min_letters_for_order(q: u64) -> u64 {
    let mut rest = q;
    let mut total = 0;
    let mut p = 2;
    while p * p <= rest {
        if rest.is_multiple_of(p) {
            let mut pk = 1;
            while rest.is_multiple_of(p) {
                rest /= p;
                pk *= p;
            }
            total += pk;
        }
        p += 1;
    }
    if rest > 1 {
        total += rest;
    }
    total
}

pub fn max_abs_entry(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Rows of a matrix as nested vectors, for reports.
pub fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::InvalidMap("matrix has no rows".into()));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::InvalidMap("matrix has no columns".into()));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch {
            expected: ncols,
            found: bad.len(),
        });
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMap("matrix has non-finite entries".into()));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn vector_from_slice(v: &[f64]) -> Vector {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        matrix_from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn nullspace_single_equation() {
        let s = nullspace(&m(&[&[1.0, -1.0]]), RANK_TOL);
        assert_eq!(s.dim(), 1);
        let b = s.basis().column(0).into_owned();
        let expected = Vector::from_vec(vec![1.0, 1.0]) / 2f64.sqrt();
        assert!((b.clone() - &expected).norm() < 1e-12 || (b + expected).norm() < 1e-12);
    }

    #[test]
    fn nullspace_full_rank_is_zero() {
        let s = nullspace(&Matrix::identity(2, 2), RANK_TOL);
        assert_eq!(s.dim(), 0);
        assert_eq!(s.ambient_dim(), 2);
    }

    #[test]
    fn nullspace_rank_one_in_r3() {
        let mat = m(&[&[1.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]);
        let s = nullspace(&mat, RANK_TOL);
        assert_eq!(s.dim(), 2);
        for b in s.basis_vectors() {
            assert!((&mat * b).amax() <= 10.0 * RANK_TOL);
        }
        assert!(s.contains(&Vector::from_vec(vec![0.0, 0.0, 1.0]), 1e-12));
        assert!(s.contains(&Vector::from_vec(vec![1.0, -1.0, 0.0]), 1e-12));
        let gram = s.basis().transpose() * s.basis();
        assert!((gram - Matrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn nullspace_of_zero_matrix_is_everything() {
        let s = nullspace(&Matrix::zeros(1, 3), RANK_TOL);
        assert_eq!(s.dim(), 3);
    }

    #[test]
    fn intersect_examples() {
        let plane = Subspace::full(2);
        let diag = Subspace::span_of_vectors(2, &[Vector::from_vec(vec![1.0, 1.0])], RANK_TOL);
        let got = intersect(&plane, &diag, RANK_TOL).unwrap();
        assert!(got.approx_eq(&diag, 1e-10));

        let e1 = Subspace::span_of_vectors(2, &[Vector::from_vec(vec![1.0, 0.0])], RANK_TOL);
        let e2 = Subspace::span_of_vectors(2, &[Vector::from_vec(vec![0.0, 1.0])], RANK_TOL);
        assert_eq!(intersect(&e1, &e2, RANK_TOL).unwrap().dim(), 0);

        let s1 = Subspace::span_of_vectors(
            3,
            &[
                Vector::from_vec(vec![1.0, 1.0, 0.0]),
                Vector::from_vec(vec![0.0, 0.0, 1.0]),
            ],
            RANK_TOL,
        );
        let ones = Vector::from_vec(vec![1.0, 1.0, 1.0]);
        let s2 = Subspace::span_of_vectors(3, std::slice::from_ref(&ones), RANK_TOL);
        let got = intersect(&s1, &s2, RANK_TOL).unwrap();
        assert_eq!(got.dim(), 1);
        assert!(s1.contains_subspace(&got, 1e-10));
        assert!(s2.contains_subspace(&got, 1e-10));
        assert!(got.contains(&ones, 1e-10));
    }

    #[test]
    fn intersect_rejects_mismatched_ambient() {
        assert!(intersect(&Subspace::full(2), &Subspace::full(3), RANK_TOL).is_err());
    }

    #[test]
    fn partitions_small_cases() {
        assert_eq!(partitions_lcm_set(1).unwrap(), BTreeSet::from([1]));
        assert_eq!(partitions_lcm_set(3).unwrap(), BTreeSet::from([1, 2, 3]));
        assert_eq!(
            partitions_lcm_set(5).unwrap(),
            BTreeSet::from([1, 2, 3, 4, 5, 6])
        );
    }

    #[test]
    fn landau_values() {
        assert_eq!(landau(1).unwrap(), 1);
        assert_eq!(landau(5).unwrap(), 6);
        assert_eq!(landau(7).unwrap(), 12);
        // OEIS A000793.
        assert_eq!(landau(20).unwrap(), 420);
    }

    #[test]
    fn partition_range_is_enforced() {
        assert!(partitions_lcm_set(0).is_err());
        assert!(landau(21).is_err());
    }

    #[test]
    fn best_known_bound_values() {
        assert_eq!(best_known_period_bound(1), 2);
        assert_eq!(best_known_period_bound(2), 8);
        assert_eq!(best_known_period_bound(3), 24);
        assert_eq!(best_known_period_bound(4), 96);
    }

    #[test]
    fn bounds_saturate() {
        assert_eq!(best_known_period_bound(200), u64::MAX);
        assert_eq!(binomial(100, 50), u64::MAX);
        assert_eq!(binomial(60, 30), 118_264_581_564_861_424);
    }

    #[test]
    fn min_letters_matches_partition_sets() {
        for n in 1..=12 {
            let set = partitions_lcm_set(n).unwrap();
            for q in 1..=200u64 {
                assert_eq!(
                    set.contains(&q),
                    min_letters_for_order(q) <= n as u64,
                    "n={n} q={q}"
                );
            }
        }
    }
}
