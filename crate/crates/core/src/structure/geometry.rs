//! The derivative projection `A` of the retract, its image `W`, and the
//! audits tying `A`, `R` and the locked faces together.

use serde::Serialize;

use crate::dynamics::{retract, retract_precise};
use crate::error::{Error, Result};
use crate::maps::{max_col_sum, max_row_sum, SelfMap};
use crate::numerics::{column_space, max_abs_entry, Matrix, Subspace, Vector};
use crate::polynorm::{DualFace, NormKind, PolyhedralNorm};
use crate::sampling::{stream, subspace_point};

use super::locked::{s_e_defect, LockedSet};

/// Relative singular-value cutoff for the image of `A`; finite differences
/// leave noise near `1e-10` in directions that should vanish.
pub const IMAGE_RANK_TOL: f64 = 1e-6;

/// Central-difference derivative of the retract of `g` at `u`, along an
/// orthonormal basis `B` of `V`, returned as the `n × n` matrix `D Bᵀ` (zero
/// on the orthogonal complement of `V`). Each retract is resolved to about
/// machine precision.
pub fn derivative_of_retract<F: SelfMap + ?Sized>(
    g: &F,
    norm: &PolyhedralNorm,
    v: &Subspace,
    u: &Vector,
    h: f64,
    max_iter: usize,
) -> Result<Matrix> {
    let n = v.ambient_dim();
    if v.dim() == 0 {
        return Ok(Matrix::zeros(n, n));
    }
    let b = v.basis();
    let mut d = Matrix::zeros(n, v.dim());
    for (j, dir) in b.column_iter().enumerate() {
        let plus = retract_precise(g, &(u + dir * h), norm, max_iter)?;
        let minus = retract_precise(g, &(u - dir * h), norm, max_iter)?;
        d.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    Ok(d * b.transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeResult {
    pub u: Vector,
    pub a: Matrix,
    /// `max |A² - A|`.
    pub a2_defect: f64,
    pub attempts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeOptions {
    pub h: f64,
    /// Half-width of the coordinate box in `V` from which `u` is drawn.
    pub radius: f64,
    pub retries: usize,
    pub check_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

/// Draws `u ∈ V` until the derivative of the retract at `u` is a projection
/// within `check_tol`, giving up after `retries` draws.
pub fn find_differentiable_point<F: SelfMap + ?Sized>(
    g: &F,
    norm: &PolyhedralNorm,
    v: &Subspace,
    opts: &DerivativeOptions,
) -> Result<DerivativeResult> {
    let mut last = f64::INFINITY;
    for attempt in 0..opts.retries.max(1) {
        let u = subspace_point(&mut stream(opts.seed, attempt as u64), v, opts.radius);
        let a = derivative_of_retract(g, norm, v, &u, opts.h, opts.max_iter)?;
        let defect = max_abs_entry(&(&a * &a - &a));
        if defect <= opts.check_tol {
            return Ok(DerivativeResult {
                u,
                a,
                a2_defect: defect,
                attempts: attempt + 1,
            });
        }
        last = defect;
    }
    Err(Error::NoDifferentiablePoint {
        retries: opts.retries.max(1),
        defect: last,
    })
}

/// `W = A(V)`.
pub fn image_subspace(a: &Matrix, v: &Subspace) -> Subspace {
    if v.dim() == 0 {
        return Subspace::zero(v.ambient_dim());
    }
    column_space(&(a * v.basis()), IMAGE_RANK_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionCheck {
    pub a2_defect: f64,
    /// Operator norm of `A` restricted to `V`.
    pub opnorm_estimate: f64,
    /// Whether `opnorm_estimate` is exact rather than a sampled lower bound.
    pub exact: bool,
    pub nonexpansive: bool,
}

/// `A² = A` and `|A x| <= |x|` on `V`. The operator norm is exact for ℓ1/ℓ∞
/// when `V` is the whole space and sampled along `V` otherwise.
pub fn verify_projection(
    a: &Matrix,
    v: &Subspace,
    norm: &PolyhedralNorm,
    samples: usize,
    seed: u64,
    tol: f64,
) -> ProjectionCheck {
    let a2_defect = max_abs_entry(&(a * a - a));
    let full = v.dim() == v.ambient_dim();
    let (opnorm, exact) = match norm.kind() {
        NormKind::Linf if full => (max_row_sum(a), true),
        NormKind::L1 if full => (max_col_sum(a), true),
        _ => (sampled_norm_on(a, v, norm, samples, seed), false),
    };
    ProjectionCheck {
        a2_defect,
        opnorm_estimate: opnorm,
        exact,
        nonexpansive: opnorm <= 1.0 + tol,
    }
}

fn sampled_norm_on(
    a: &Matrix,
    v: &Subspace,
    norm: &PolyhedralNorm,
    samples: usize,
    seed: u64,
) -> f64 {
    if v.dim() == 0 {
        return 0.0;
    }
    let ratio = |x: &Vector| {
        let nx = norm.norm(x);
        if nx > 0.0 {
            norm.norm(&(a * x)) / nx
        } else {
            0.0
        }
    };
    let basis = v.basis_vectors();
    let random = (0..samples).map(|i| subspace_point(&mut stream(seed, i as u64), v, 1.0));
    basis
        .iter()
        .map(ratio)
        .chain(random.map(|x| ratio(&x)))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsometryCheck {
    pub pairs: usize,
    /// `max | |R x - R y| - |x - y| |` over sampled `x, y ∈ W`.
    pub max_defect: f64,
    /// `max |A R(x) - x|` over the sampled points.
    pub max_inverse_defect: f64,
}

/// Samples `pairs` pairs in `W` and checks that `R` is an isometry on `W`
/// with `A` as its inverse.
#[allow(clippy::too_many_arguments)]
pub fn verify_isometry<F: SelfMap + ?Sized>(
    g: &F,
    a: &Matrix,
    w: &Subspace,
    norm: &PolyhedralNorm,
    pairs: usize,
    seed: u64,
    radius: f64,
    fp_tol: f64,
    max_iter: usize,
) -> Result<IsometryCheck> {
    if w.dim() == 0 {
        return Ok(IsometryCheck {
            pairs: 0,
            max_defect: 0.0,
            max_inverse_defect: 0.0,
        });
    }
    let mut max_defect: f64 = 0.0;
    let mut max_inverse: f64 = 0.0;
    for i in 0..pairs {
        let mut rng = stream(seed, i as u64);
        let x = subspace_point(&mut rng, w, radius);
        let y = subspace_point(&mut rng, w, radius);
        let rx = retract(g, &x, norm, fp_tol, max_iter)?;
        let ry = retract(g, &y, norm, fp_tol, max_iter)?;
        max_defect = max_defect.max((norm.distance(&rx, &ry) - norm.distance(&x, &y)).abs());
        max_inverse = max_inverse
            .max(norm.distance(&(a * &rx), &x))
            .max(norm.distance(&(a * &ry), &y));
    }
    Ok(IsometryCheck {
        pairs,
        max_defect,
        max_inverse_defect: max_inverse,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueCheck {
    pub samples: usize,
    /// `max |φ(R x) - φ(x)|` over sampled `x ∈ V` and φ in the minimal faces.
    pub retract_defect: f64,
    /// `max |φ(A x) - φ(x)|` over the same samples.
    pub projection_defect: f64,
}

impl ValueCheck {
    pub fn max_defect(&self) -> f64 {
        self.retract_defect.max(self.projection_defect)
    }
}

/// Union of the indices of the given faces.
pub fn union_of_faces(sets: &[LockedSet]) -> DualFace {
    DualFace::new(sets.iter().flat_map(|s| s.face.indices().iter().copied()))
}

/// Checks that `R` and `A` preserve every functional of the minimal faces on `V`.
#[allow(clippy::too_many_arguments)]
pub fn value_preservation<F: SelfMap + ?Sized>(
    g: &F,
    a: &Matrix,
    v: &Subspace,
    norm: &PolyhedralNorm,
    functionals: &DualFace,
    samples: usize,
    seed: u64,
    radius: f64,
    fp_tol: f64,
    max_iter: usize,
) -> Result<ValueCheck> {
    let extremes = norm.dual_extremes();
    let mut out = ValueCheck {
        samples: 0,
        retract_defect: 0.0,
        projection_defect: 0.0,
    };
    if v.dim() == 0 {
        return Ok(out);
    }
    for i in 0..samples {
        let x = subspace_point(&mut stream(seed, i as u64), v, radius);
        let rx = retract(g, &x, norm, fp_tol, max_iter)?;
        let ax = a * &x;
        for &k in functionals.indices() {
            let phi = &extremes[k];
            let px = phi.dot(&x);
            out.retract_defect = out.retract_defect.max((phi.dot(&rx) - px).abs());
            out.projection_defect = out.projection_defect.max((phi.dot(&ax) - px).abs());
        }
        out.samples += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeparationCheck {
    pub pairs: usize,
    /// Pairs of distinct fixed points on which every functional of the
    /// minimal faces agrees: evidence of undiscovered locked faces.
    pub unseparated: usize,
}

/// Fixed points farther apart than `10 tol` should be told apart by some
/// functional of the minimal faces.
pub fn separation_check(
    norm: &PolyhedralNorm,
    fixed_points: &[Vector],
    functionals: &DualFace,
    tol: f64,
) -> SeparationCheck {
    let extremes = norm.dual_extremes();
    let mut out = SeparationCheck {
        pairs: 0,
        unseparated: 0,
    };
    for (i, x) in fixed_points.iter().enumerate() {
        for y in &fixed_points[i + 1..] {
            let d = x - y;
            if norm.norm(&d) <= 10.0 * tol {
                continue;
            }
            out.pairs += 1;
            if !functionals
                .indices()
                .iter()
                .any(|&k| extremes[k].dot(&d).abs() > tol)
            {
                out.unseparated += 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaceTranslationCheck {
    pub samples: usize,
    /// `max |φ(g(z)) - φ(z)|` over φ in `E` and sampled `z ∈ w + L_E`,
    /// relative to `max(1, |z|)`.
    pub max_defect: f64,
}

/// For each locked set `(E, v, w)`, samples `z ∈ w + L_E` and measures how
/// far `z` is from `S_E`.
pub fn face_translation_check<F: SelfMap + ?Sized>(
    g: &F,
    norm: &PolyhedralNorm,
    sets: &[LockedSet],
    samples: usize,
    seed: u64,
    radius: f64,
) -> Result<FaceTranslationCheck> {
    let mut out = FaceTranslationCheck {
        samples: 0,
        max_defect: 0.0,
    };
    for (s, set) in sets.iter().enumerate() {
        let l_e = norm.l_e_subspace(&set.face, crate::numerics::RANK_TOL)?;
        for i in 0..samples {
            let mut rng = stream(seed, (s * samples + i) as u64);
            let z = &set.witness_w + subspace_point(&mut rng, &l_e, radius);
            let defect = s_e_defect(g, norm, &set.face, &z)? / norm.norm(&z).max(1.0);
            out.max_defect = out.max_defect.max(defect);
            out.samples += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linearization {
    /// Matrix of `x ↦ A f(R x)` in the orthonormal basis of `W`.
    pub in_basis: Matrix,
    /// The same map as an `n × n` matrix, zero on the complement of `W`.
    pub ambient: Matrix,
    /// Smallest `k` with `L^k = I` on `W` (up to `tol`), if at most the cap.
    pub order: Option<usize>,
    pub superposition_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearizeOptions {
    pub samples: usize,
    pub seed: u64,
    pub radius: f64,
    pub fp_tol: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub order_cap: usize,
}

/// Matrix of `T = A ∘ f ∘ R` on `W`, where `R` is the retract of `g` (the
/// power of `f` whose fixed set is studied) and `f` fixes the origin.
/// Superposition `T(sx + ty) = s T(x) + t T(y)` is audited on random samples.
pub fn linearize_on_fix<F: SelfMap + ?Sized, G: SelfMap + ?Sized>(
    f: &F,
    g: &G,
    a: &Matrix,
    w: &Subspace,
    norm: &PolyhedralNorm,
    opts: &LinearizeOptions,
) -> Result<Linearization> {
    let n = w.ambient_dim();
    let k = w.dim();
    if k == 0 {
        return Ok(Linearization {
            in_basis: Matrix::zeros(0, 0),
            ambient: Matrix::zeros(n, n),
            order: Some(1),
            superposition_residual: 0.0,
        });
    }
    let t = |x: &Vector| -> Result<Vector> {
        let rx = retract(g, x, norm, opts.fp_tol, opts.max_iter)?;
        Ok(a * f.apply(&rx)?)
    };
    let b = w.basis();
    let mut images = Matrix::zeros(n, k);
    for (j, col) in b.column_iter().enumerate() {
        images.set_column(j, &t(&col.into_owned())?);
    }
    let in_basis = b.transpose() * &images;
    let ambient = b * &in_basis * b.transpose();

    let mut residual: f64 = 0.0;
    for i in 0..opts.samples {
        let mut rng = stream(opts.seed, i as u64);
        let x = subspace_point(&mut rng, w, opts.radius);
        let y = subspace_point(&mut rng, w, opts.radius);
        let s: f64 = rand::Rng::random_range(&mut rng, -1.0..=1.0);
        let combo = &x * s + &y * (1.0 - s);
        let lhs = t(&combo)?;
        let rhs = t(&x)? * s + t(&y)? * (1.0 - s);
        let scale = norm.norm(&x).max(norm.norm(&y)).max(1.0);
        residual = residual
            .max(norm.distance(&lhs, &rhs) / scale)
            .max(norm.distance(&t(&x)?, &(&ambient * &x)) / scale);
    }
    if residual > opts.tol {
        return Err(Error::LinearityViolation { residual });
    }
    Ok(Linearization {
        order: matrix_order(&in_basis, opts.order_cap, opts.tol.max(1e-12)),
        in_basis,
        ambient,
        superposition_residual: residual,
    })
}

/// Smallest `k <= cap` with `max |M^k - I| <= tol`.
pub fn matrix_order(m: &Matrix, cap: usize, tol: f64) -> Option<usize> {
    let eye = Matrix::identity(m.nrows(), m.ncols());
    let mut power = eye.clone();
    for k in 1..=cap {
        power = &power * m;
        if max_abs_entry(&(&power - &eye)) <= tol {
            return Some(k);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineAudit {
    pub samples: usize,
    /// `max |f(z) - z|_2` over sampled affine combinations `z`.
    pub max_defect: f64,
}

/// Euclidean residual of `f` on affine combinations `(1 - t) x + t y`,
/// `t ∈ [-2, 3]`, of listed fixed points. Only meaningful for strictly convex
/// norms, where the fixed-point set is affine.
pub fn affine_fix_audit<F: SelfMap + ?Sized>(
    f: &F,
    strictly_convex: bool,
    fixed_points: &[Vector],
    samples: usize,
    seed: u64,
) -> Result<AffineAudit> {
    if !strictly_convex {
        return Err(Error::NotStrictlyConvex);
    }
    let m = fixed_points.len();
    let mut out = AffineAudit {
        samples: 0,
        max_defect: 0.0,
    };
    if m < 2 {
        return Ok(out);
    }
    for i in 0..samples {
        let mut rng = stream(seed, i as u64);
        let a = rand::Rng::random_range(&mut rng, 0..m);
        let b = (a + rand::Rng::random_range(&mut rng, 1..m)) % m;
        let t: f64 = rand::Rng::random_range(&mut rng, -2.0..=3.0);
        let z = &fixed_points[a] * (1.0 - t) + &fixed_points[b] * t;
        out.max_defect = out.max_defect.max((f.apply(&z)? - &z).norm());
        out.samples += 1;
    }
    Ok(out)
}
