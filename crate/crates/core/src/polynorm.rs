//! Polyhedral norms given by the extreme points of the dual unit ball.
//!
//! For a polyhedral norm, `|x| = max φ(x)` over the finitely many extreme points
//! φ of the dual ball. Faces of the dual ball are stored extensionally as the
//! index sets of the extreme points they contain, which is all that the
//! duality map `J(x)` and the locked-set machinery need.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{nullspace, Matrix, Subspace, Vector, RANK_TOL};

/// Default relative tolerance deciding face membership in `J(x)`.
pub const FACE_TOL: f64 = 1e-9;

/// Largest dimension for which the ℓ1 dual extremes are materialized.
pub const MAX_L1_DIM: usize = 16;

/// Upper limit on the number of Carathéodory subsets examined when checking
/// extremality of a custom dual extreme set.
const EXTREMALITY_BUDGET: u64 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Linf,
    L1,
    Custom,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::Linf => "linf",
            NormKind::L1 => "l1",
            NormKind::Custom => "custom",
        })
    }
}

/// A face of the dual unit ball, identified by the sorted indices of the dual
/// extreme points it contains.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualFace(Vec<usize>);

impl DualFace {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    pub fn is_subset(&self, other: &DualFace) -> bool {
        self.0.iter().all(|i| other.contains(*i))
    }

    pub fn is_proper_subset(&self, other: &DualFace) -> bool {
        self.len() < other.len() && self.is_subset(other)
    }
}

/// A norm on `R^n` whose dual unit ball is the convex hull of finitely many
/// functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedralNorm {
    kind: NormKind,
    dim: usize,
    dual_extremes: Vec<Vector>,
    extremality_verified: bool,
}

impl PolyhedralNorm {
    /// The ∞-norm: dual extremes `±e_i`, ordered `e_1, -e_1, e_2, -e_2, ...`.
    pub fn linf(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidNorm("dimension must be at least 1".into()));
        }
        let mut dual_extremes = Vec::with_capacity(2 * n);
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut e = Vector::zeros(n);
                e[i] = sign;
                dual_extremes.push(e);
            }
        }
        Ok(Self {
            kind: NormKind::Linf,
            dim: n,
            dual_extremes,
            extremality_verified: true,
        })
    }

    /// The 1-norm: dual extremes are all `2^n` sign vectors. Index `k` encodes
    /// the sign pattern with bit `i` set meaning coordinate `i` is negative.
    pub fn l1(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_L1_DIM {
            return Err(Error::OutOfRange {
                what: "l1 dimension",
                value: n,
                min: 1,
                max: MAX_L1_DIM,
            });
        }
        let dual_extremes = (0..1usize << n)
            .map(|mask| Vector::from_fn(n, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }))
            .collect();
        Ok(Self {
            kind: NormKind::L1,
            dim: n,
            dual_extremes,
            extremality_verified: true,
        })
    }

    /// A custom polyhedral norm. Checks symmetry, spanning and (within a
    /// brute-force budget) extremality of the supplied functionals.
    pub fn custom(dual_extremes: Vec<Vector>, tol: f64) -> Result<Self> {
        let dim = dual_extremes
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::InvalidNorm("no dual extreme points".into()))?;
        if dim == 0 {
            return Err(Error::InvalidNorm("dimension must be at least 1".into()));
        }
        if let Some(bad) = dual_extremes.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        if dual_extremes.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidNorm("non-finite dual extreme".into()));
        }
        for (i, phi) in dual_extremes.iter().enumerate() {
            let neg = -phi;
            if !dual_extremes.iter().any(|psi| (psi - &neg).amax() <= tol) {
                return Err(Error::InvalidNorm(format!(
                    "dual extreme {i} has no antipodal partner"
                )));
            }
        }
        let stacked = Matrix::from_rows(
            &dual_extremes
                .iter()
                .map(|v| v.transpose())
                .collect::<Vec<_>>(),
        );
        if nullspace(&stacked, RANK_TOL).dim() != 0 {
            return Err(Error::InvalidNorm(
                "dual extremes do not span the space".into(),
            ));
        }
        let extremality_verified = check_extremality(&dual_extremes, tol)?.is_some();
        Ok(Self {
            kind: NormKind::Custom,
            dim,
            dual_extremes,
            extremality_verified,
        })
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dual_extremes(&self) -> &[Vector] {
        &self.dual_extremes
    }

    pub fn num_extremes(&self) -> usize {
        self.dual_extremes.len()
    }

    /// Whether extremality was actually checked (it is skipped past a
    /// brute-force budget for large custom sets).
    pub fn extremality_verified(&self) -> bool {
        self.extremality_verified
    }

    /// The face containing every dual extreme point, `J(0)`.
    pub fn full_face(&self) -> DualFace {
        DualFace::new(0..self.dual_extremes.len())
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() == self.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            })
        }
    }

    /// `|x| = max φ(x)` over the dual extremes.
    pub fn norm_eval(&self, x: &Vector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.norm(x))
    }

    /// Unchecked variant of [`norm_eval`](Self::norm_eval).
    ///
    /// Panics if the dimension of `x` does not match.
    pub fn norm(&self, x: &Vector) -> f64 {
        assert_eq!(x.len(), self.dim, "vector dimension mismatch");
        self.dual_extremes
            .iter()
            .map(|phi| phi.dot(x))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }

    pub fn distance(&self, x: &Vector, y: &Vector) -> f64 {
        self.norm(&(x - y))
    }

    /// `J(x)`: indices of all φ with `φ(x) >= |x| - tol * max(1, |x|)`. For
    /// `x = 0` this is every index.
    pub fn duality_map(&self, x: &Vector, tol: f64) -> Result<DualFace> {
        self.check_dim(x)?;
        let values: Vec<f64> = self.dual_extremes.iter().map(|phi| phi.dot(x)).collect();
        let nx = values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0);
        let threshold = nx - tol * nx.max(1.0);
        Ok(DualFace::new(
            values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v >= threshold)
                .map(|(i, _)| i),
        ))
    }

    /// A radius ε such that `J(x + y) ⊆ J(x)` whenever `|y| <= ε`.
    ///
    /// With `c = max φ(x)/|x|` over the extremes outside `J(x)`, returns
    /// `(1 - c) |x| / 4`; returns `+∞` for `x = 0`, where `J(0)` is everything.
    pub fn stability_radius(&self, x: &Vector, tol: f64) -> Result<f64> {
        let face = self.duality_map(x, tol)?;
        let nx = self.norm(x);
        if nx == 0.0 || face.len() == self.dual_extremes.len() {
            return Ok(f64::INFINITY);
        }
        let c = self
            .dual_extremes
            .iter()
            .enumerate()
            .filter(|(i, _)| !face.contains(*i))
            .map(|(_, phi)| phi.dot(x) / nx)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok((1.0 - c) * nx / 4.0)
    }

    /// `L_E = {x : φ(x) = ψ(x) for all φ, ψ ∈ E}`.
    pub fn l_e_subspace(&self, face: &DualFace, tol: f64) -> Result<Subspace> {
        let idx = face.indices();
        let Some((&first, rest)) = idx.split_first() else {
            return Err(Error::InvalidNorm("L_E needs a nonempty face".into()));
        };
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.dual_extremes.len()) {
            return Err(Error::OutOfRange {
                what: "dual extreme index",
                value: bad,
                min: 0,
                max: self.dual_extremes.len() - 1,
            });
        }
        if rest.is_empty() {
            return Ok(Subspace::full(self.dim));
        }
        let base = &self.dual_extremes[first];
        let rows: Vec<_> = rest
            .iter()
            .map(|&i| (&self.dual_extremes[i] - base).transpose())
            .collect();
        Ok(nullspace(&Matrix::from_rows(&rows), tol))
    }

    /// Samples points of the face `F_E = {x ∈ B_X : φ(x) = 1 for all φ ∈ E}`
    /// and compares their span with `L_E`.
    ///
    /// Points are drawn from `L_E` and kept when `J(x) ⊇ E`; the cone over
    /// `F_E` has nonempty interior in `L_E` whenever `E` is a `J(y)`.
    pub fn face_of_ball(
        &self,
        face: &DualFace,
        tol: f64,
        sampler: &FaceSampler,
    ) -> Result<FaceSample> {
        let l_e = self.l_e_subspace(face, RANK_TOL)?;
        let k = l_e.dim();
        if k == 0 {
            return Err(Error::EmptyFace { draws: 0 });
        }
        let target = sampler.points.max(k);
        let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
        let mut points = Vec::with_capacity(target);
        let mut draws = 0;
        while draws < sampler.max_draws && points.len() < target {
            draws += 1;
            let coords: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
            let x = l_e.point(&coords);
            let nx = self.norm(&x);
            if nx == 0.0 {
                continue;
            }
            let jx = self.duality_map(&x, tol)?;
            if face.is_subset(&jx) {
                points.push(x / nx);
            }
        }
        if points.is_empty() {
            return Err(Error::EmptyFace { draws });
        }
        let span = Subspace::span_of_vectors(self.dim, &points, RANK_TOL);
        let span_matches = span.approx_eq(&l_e, tol.max(RANK_TOL));
        Ok(FaceSample {
            points,
            draws,
            span,
            l_e,
            span_matches,
        })
    }
}

/// Controls for [`PolyhedralNorm::face_of_ball`].
#[derive(Debug, Clone, Copy)]
pub struct FaceSampler {
    /// Accepted points to collect (raised to `dim L_E` if smaller).
    pub points: usize,
    pub max_draws: usize,
    pub seed: u64,
}

impl Default for FaceSampler {
    fn default() -> Self {
        Self {
            points: 12,
            max_draws: 20_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FaceSample {
    pub points: Vec<Vector>,
    pub draws: usize,
    pub span: Subspace,
    pub l_e: Subspace,
    pub span_matches: bool,
}

/// `Some(())` if every point is extreme, `None` if the budget was exceeded,
/// and an error naming the first non-extreme point otherwise.
fn check_extremality(points: &[Vector], tol: f64) -> Result<Option<()>> {
    let m = points.len();
    let n = points[0].len();
    let max_k = (n + 1).min(m - 1);
    let others = (m - 1) as u64;
    let subsets: u64 = (1..=max_k as u64)
        .map(|k| crate::numerics::binomial(others, k))
        .fold(0u64, u64::saturating_add)
        .saturating_mul(m as u64);
    if subsets > EXTREMALITY_BUDGET {
        return Ok(None);
    }
    for i in 0..m {
        let rest: Vec<usize> = (0..m).filter(|&j| j != i).collect();
        for k in 1..=max_k {
            let mut found = false;
            for_each_combination(rest.len(), k, &mut |combo| {
                if found {
                    return;
                }
                let chosen: Vec<&Vector> = combo.iter().map(|&c| &points[rest[c]]).collect();
                if in_convex_hull(&points[i], &chosen, tol) {
                    found = true;
                }
            });
            if found {
                return Err(Error::InvalidNorm(format!(
                    "dual point {i} lies in the convex hull of the others"
                )));
            }
        }
    }
    Ok(Some(()))
}

fn for_each_combination(m: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        f(&combo);
        let mut i = k;
        while i > 0 && combo[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        combo[i - 1] += 1;
        for j in i..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

/// Barycentric test of `p ∈ conv(vertices)` for an affinely independent set.
fn in_convex_hull(p: &Vector, vertices: &[&Vector], tol: f64) -> bool {
    let n = p.len();
    let k = vertices.len();
    let mut a = Matrix::zeros(n + 1, k);
    for (j, v) in vertices.iter().enumerate() {
        a.view_mut((0, j), (n, 1)).copy_from(*v);
        a[(n, j)] = 1.0;
    }
    let mut rhs = Vector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from(p);
    rhs[n] = 1.0;
    let svd = a.clone().svd(true, true);
    let Ok(lambda) = svd.solve(&rhs, 1e-12) else {
        return false;
    };
    let residual = (&a * &lambda - &rhs).amax();
    residual <= tol.max(1e-12) && lambda.iter().all(|&l| l >= -tol.max(1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn face_vectors(norm: &PolyhedralNorm, face: &DualFace) -> Vec<Vector> {
        face.indices()
            .iter()
            .map(|&i| norm.dual_extremes()[i].clone())
            .collect()
    }

    fn hexagon() -> PolyhedralNorm {
        PolyhedralNorm::custom(
            vec![
                v(&[1.0, 0.0]),
                v(&[-1.0, 0.0]),
                v(&[0.0, 1.0]),
                v(&[0.0, -1.0]),
                v(&[1.0, 1.0]),
                v(&[-1.0, -1.0]),
            ],
            1e-9,
        )
        .unwrap()
    }

    #[test]
    fn linf_construction_and_eval() {
        let n = PolyhedralNorm::linf(2).unwrap();
        assert_eq!(n.num_extremes(), 4);
        assert_eq!(n.norm_eval(&v(&[1.0, -2.0])).unwrap(), 2.0);
        assert_eq!(n.norm_eval(&v(&[3.0, 3.0])).unwrap(), 3.0);
    }

    #[test]
    fn l1_construction_and_eval() {
        let n = PolyhedralNorm::l1(2).unwrap();
        assert_eq!(n.num_extremes(), 4);
        assert_eq!(n.norm_eval(&v(&[1.0, -2.0])).unwrap(), 3.0);
        let n3 = PolyhedralNorm::l1(3).unwrap();
        assert_eq!(n3.norm_eval(&v(&[0.0, 0.0, 5.0])).unwrap(), 5.0);
        assert!(PolyhedralNorm::l1(17).is_err());
    }

    #[test]
    fn custom_hexagon_eval() {
        assert_eq!(hexagon().norm_eval(&v(&[1.0, 1.0])).unwrap(), 2.0);
    }

    #[test]
    fn custom_rejects_bad_extremes() {
        // Not symmetric.
        assert!(PolyhedralNorm::custom(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])], 1e-9).is_err());
        // Not spanning.
        assert!(PolyhedralNorm::custom(vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0])], 1e-9).is_err());
        // (0.5, 0) is inside the hull of ±e1.
        let err = PolyhedralNorm::custom(
            vec![
                v(&[1.0, 0.0]),
                v(&[-1.0, 0.0]),
                v(&[0.0, 1.0]),
                v(&[0.0, -1.0]),
                v(&[0.5, 0.0]),
                v(&[-0.5, 0.0]),
            ],
            1e-9,
        );
        assert!(matches!(err, Err(Error::InvalidNorm(_))));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let n = PolyhedralNorm::linf(2).unwrap();
        assert!(matches!(
            n.norm_eval(&v(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(n.duality_map(&v(&[1.0]), FACE_TOL).is_err());
    }

    #[test]
    fn duality_map_examples() {
        let linf = PolyhedralNorm::linf(2).unwrap();
        let face = linf.duality_map(&v(&[3.0, -3.0]), FACE_TOL).unwrap();
        assert_eq!(
            face_vectors(&linf, &face),
            vec![v(&[1.0, 0.0]), v(&[0.0, -1.0])]
        );

        let zero = linf.duality_map(&v(&[0.0, 0.0]), FACE_TOL).unwrap();
        assert_eq!(zero, linf.full_face());

        let l1 = PolyhedralNorm::l1(2).unwrap();
        let face = l1.duality_map(&v(&[2.0, 0.0]), FACE_TOL).unwrap();
        let mut got = face_vectors(&l1, &face);
        got.sort_by(|a, b| b[1].partial_cmp(&a[1]).unwrap());
        assert_eq!(got, vec![v(&[1.0, 1.0]), v(&[1.0, -1.0])]);
    }

    #[test]
    fn stability_radius_examples() {
        let linf = PolyhedralNorm::linf(2).unwrap();
        let eps = linf.stability_radius(&v(&[3.0, -3.0]), FACE_TOL).unwrap();
        assert!((eps - 1.5).abs() < 1e-15);
        assert!(linf
            .stability_radius(&v(&[0.0, 0.0]), FACE_TOL)
            .unwrap()
            .is_infinite());
        let eps = linf.stability_radius(&v(&[1.0, 0.0]), FACE_TOL).unwrap();
        assert!((eps - 0.25).abs() < 1e-15);
    }

    #[test]
    fn l_e_examples() {
        let linf = PolyhedralNorm::linf(2).unwrap();
        // Index layout: 0 = e1, 1 = -e1, 2 = e2, 3 = -e2.
        assert_eq!(
            linf.l_e_subspace(&DualFace::new([0]), RANK_TOL)
                .unwrap()
                .dim(),
            2
        );
        let l = linf.l_e_subspace(&DualFace::new([0, 2]), RANK_TOL).unwrap();
        assert!(l.approx_eq(
            &Subspace::span_of_vectors(2, &[v(&[1.0, 1.0])], RANK_TOL),
            1e-12
        ));
        let l = linf.l_e_subspace(&DualFace::new([0, 3]), RANK_TOL).unwrap();
        assert!(l.approx_eq(
            &Subspace::span_of_vectors(2, &[v(&[1.0, -1.0])], RANK_TOL),
            1e-12
        ));
        assert!(linf.l_e_subspace(&DualFace::empty(), RANK_TOL).is_err());
    }

    #[test]
    fn face_of_ball_examples() {
        let linf = PolyhedralNorm::linf(2).unwrap();
        let sampler = FaceSampler::default();

        let s = linf
            .face_of_ball(&DualFace::new([0]), FACE_TOL, &sampler)
            .unwrap();
        assert!(s.span_matches);
        assert_eq!(s.span.dim(), 2);
        for p in &s.points {
            assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() <= 1.0 + 1e-12);
        }

        let s = linf
            .face_of_ball(&DualFace::new([0, 2]), FACE_TOL, &sampler)
            .unwrap();
        assert!(s.span_matches);
        for p in &s.points {
            assert!((p - v(&[1.0, 1.0])).amax() < 1e-12);
        }

        let l1 = PolyhedralNorm::l1(2).unwrap();
        // Index 0 is the sign vector (1, 1).
        let s = l1
            .face_of_ball(&DualFace::new([0]), FACE_TOL, &sampler)
            .unwrap();
        assert!(s.span_matches);
        assert_eq!(s.span.dim(), 2);
        for p in &s.points {
            assert!(p.iter().all(|c| *c >= -1e-12));
            assert!((p.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn face_of_full_ball_is_empty() {
        let linf = PolyhedralNorm::linf(2).unwrap();
        assert!(matches!(
            linf.face_of_ball(&linf.full_face(), FACE_TOL, &FaceSampler::default()),
            Err(Error::EmptyFace { .. })
        ));
    }

    #[test]
    fn dual_face_ordering_and_subsets() {
        let a = DualFace::new([3, 1, 1]);
        assert_eq!(a.indices(), &[1, 3]);
        let b = DualFace::new([1, 2, 3]);
        assert!(a.is_proper_subset(&b));
        assert!(!b.is_subset(&a));
        assert!(a.is_subset(&a) && !a.is_proper_subset(&a));
    }
}
