//! Geometry of the fixed-point set: locked faces, `V(f)`, the derivative
//! projection `A` of the retract, its image `W`, and the audits relating them.
//!
//! [`analyze`] runs the whole pipeline on `g = f^power`, after translating a
//! fixed point of `f` to the origin.

pub mod geometry;
pub mod locked;
pub mod oracle;
pub mod projections;

use rayon::prelude::*;

use crate::dynamics::{krasnoselskii, retract_precise, FixedPointResult};
use crate::error::{Error, Result};
use crate::maps::{Iterated, SelfMap, Translated};
use crate::numerics::{max_abs_entry, Matrix, Subspace, Vector};
use crate::polynorm::{DualFace, NormKind, PolyhedralNorm};
use crate::sampling::{box_points, derive_seed};

pub use geometry::{
    affine_fix_audit, derivative_of_retract, find_differentiable_point, image_subspace,
    linearize_on_fix, matrix_order, separation_check, value_preservation, verify_isometry,
    verify_projection, AffineAudit, DerivativeOptions, DerivativeResult, FaceTranslationCheck,
    IsometryCheck, Linearization, LinearizeOptions, ProjectionCheck, SeparationCheck, ValueCheck,
};
pub use locked::{
    discovery_coverage, find_locked_sets, minimal_locked, s_e_member, v_of_f, DiscoveryCoverage,
    LockedSet, DEFAULT_SEPARATION,
};
pub use oracle::{enumerate_faces, oracle_minimal_locked, witness_pool, OracleResult};
pub use projections::{partition_support, projection_l1, projection_linf, support_of_v};

#[derive(Debug, Clone, PartialEq)]
pub struct StructureOptions {
    /// Study `Fix(f^power)`.
    pub power: usize,
    pub starts: usize,
    pub seed: u64,
    /// Center of the box of starting points; the origin when `None`.
    pub center: Option<Vector>,
    pub radius: f64,
    pub fp_tol: f64,
    pub face_tol: f64,
    pub check_tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
    pub retry_budget: usize,
    /// Pairs for the isometry audit; also the sample count of the other audits.
    pub samples: usize,
    pub separation: f64,
    pub order_cap: usize,
}

impl StructureOptions {
    pub fn new(starts: usize, seed: u64) -> Self {
        Self {
            power: 1,
            starts,
            seed,
            center: None,
            radius: 2.0,
            fp_tol: 1e-10,
            face_tol: 1e-9,
            check_tol: 1e-8,
            max_iter: 10_000,
            fd_step: 1e-5,
            retry_budget: 16,
            samples: 256,
            separation: DEFAULT_SEPARATION,
            order_cap: 1_000,
        }
    }
}

/// Explicit nonexpansive projection of `R^n` onto `V` (ℓ∞ and ℓ1 only).
#[derive(Debug, Clone, PartialEq)]
pub struct NormProjection {
    /// ℓ∞: the classes of equal modulus. ℓ1: a single class, the support.
    pub classes: Vec<Vec<usize>>,
    pub matrix: Matrix,
    pub idempotence_defect: f64,
    pub opnorm: f64,
    /// `max |P x - x|` over a basis of `V`.
    pub identity_on_v_defect: f64,
}

/// The linearized action extended to all of `R^n` as `T A P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub matrix: Matrix,
    pub opnorm: f64,
    /// `max |(T A P) x - T x|` over a basis of `W`.
    pub agreement_defect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureAnalysis {
    pub power: usize,
    /// Fixed point of `f` moved to the origin.
    pub basepoint: Vector,
    /// Converged fixed points of `f^power`, original coordinates.
    pub fixed_points: Vec<Vector>,
    pub not_converged: usize,
    /// Locked sets with witnesses in the translated frame.
    pub locked: Vec<LockedSet>,
    pub minimal: Vec<LockedSet>,
    pub coverage: DiscoveryCoverage,
    pub v: Subspace,
    pub derivative: DerivativeResult,
    pub w: Subspace,
    pub projection_check: ProjectionCheck,
    pub isometry_check: IsometryCheck,
    pub value_check: ValueCheck,
    pub separation: SeparationCheck,
    pub face_translation: FaceTranslationCheck,
    pub norm_projection: Option<Result<NormProjection>>,
    pub linearization: Result<Linearization>,
    pub extension: Option<Extension>,
}

impl StructureAnalysis {
    /// Indices of all functionals in the minimal faces.
    pub fn functionals(&self) -> DualFace {
        geometry::union_of_faces(&self.minimal)
    }

    /// Audits that should hold exactly, exceeding `check_tol`.
    pub fn alarms(&self, check_tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        let mut flag = |cond: bool, what: String| {
            if cond {
                out.push(what);
            }
        };
        let p = &self.projection_check;
        flag(
            p.a2_defect > check_tol,
            format!("A^2 - A defect {:e}", p.a2_defect),
        );
        flag(
            !p.nonexpansive,
            format!("A has operator norm {} on V", p.opnorm_estimate),
        );
        let iso = &self.isometry_check;
        flag(
            iso.max_defect > check_tol,
            format!("isometry defect {:e}", iso.max_defect),
        );
        flag(
            iso.max_inverse_defect > check_tol,
            format!("A R - id defect on W {:e}", iso.max_inverse_defect),
        );
        let val = self.value_check.max_defect();
        flag(
            val > check_tol,
            format!("value preservation defect {val:e}"),
        );
        flag(
            self.face_translation.max_defect > check_tol,
            format!(
                "w + L_E not in S_E: defect {:e}",
                self.face_translation.max_defect
            ),
        );
        if let Some(Err(e)) = &self.norm_projection {
            flag(true, format!("projection onto V: {e}"));
        }
        if let Some(Ok(p)) = &self.norm_projection {
            flag(
                p.idempotence_defect > check_tol || p.identity_on_v_defect > check_tol,
                format!(
                    "projection onto V defects {:e}, {:e}",
                    p.idempotence_defect, p.identity_on_v_defect
                ),
            );
            flag(
                p.opnorm > 1.0 + check_tol,
                format!("projection onto V has norm {}", p.opnorm),
            );
        }
        if let Err(e) = &self.linearization {
            flag(true, format!("linearization: {e}"));
        }
        if let Some(ext) = &self.extension {
            flag(
                ext.opnorm > 1.0 + check_tol,
                format!("extension has norm {}", ext.opnorm),
            );
            flag(
                ext.agreement_defect > check_tol,
                format!("extension disagrees on W by {:e}", ext.agreement_defect),
            );
        }
        out
    }
}

/// Runs the averaged iteration of `g` from every start, in parallel, keeping
/// the input order.
pub fn harvest_fixed_points<F: SelfMap + ?Sized>(
    g: &F,
    norm: &PolyhedralNorm,
    starts: &[Vector],
    fp_tol: f64,
    max_iter: usize,
) -> Result<Vec<FixedPointResult>> {
    starts
        .par_iter()
        .map(|x| krasnoselskii(g, x, norm, fp_tol, max_iter))
        .collect()
}

/// Seed tags for the independent random streams of one analysis.
mod tags {
    pub const STARTS: u64 = 1;
    pub const DERIVATIVE: u64 = 2;
    pub const PROJECTION: u64 = 3;
    pub const ISOMETRY: u64 = 4;
    pub const VALUES: u64 = 5;
    pub const FACES: u64 = 6;
    pub const LINEARIZE: u64 = 7;
}

/// Full structure pipeline for `f^power`.
///
/// Fails with `NotConverged` when no start converges or `f` itself has no
/// fixed point reachable from the box center, with `ContainmentViolation`
/// when a fixed point escapes `V`, and with `NoDifferentiablePoint` when no
/// sampled `u` yields a projection. Other audit outcomes are recorded in the
/// result.
pub fn analyze<F: SelfMap + ?Sized>(
    f: &F,
    norm: &PolyhedralNorm,
    opts: &StructureOptions,
) -> Result<StructureAnalysis> {
    let n = norm.dim();
    if f.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: f.dim(),
        });
    }
    let power = opts.power.max(1);
    let center = opts.center.clone().unwrap_or_else(|| Vector::zeros(n));
    let fp = Iterated {
        map: f,
        times: power,
    };

    let starts = box_points(
        &center,
        opts.radius,
        opts.starts.max(1),
        derive_seed(opts.seed, tags::STARTS),
    );
    let results = harvest_fixed_points(&fp, norm, &starts, opts.fp_tol, opts.max_iter)?;
    let not_converged = results.iter().filter(|r| !r.converged()).count();
    // Polished to roughly machine precision: residual noise at the level of
    // `fp_tol` would otherwise blur the duality map of small differences.
    let fixed_points: Vec<Vector> = results
        .par_iter()
        .filter(|r| r.converged())
        .map(|r| retract_precise(&fp, &r.point, norm, opts.max_iter))
        .collect::<Result<_>>()?;
    if fixed_points.is_empty() {
        let best = results
            .iter()
            .min_by(|a, b| a.residual.total_cmp(&b.residual))
            .expect("at least one start");
        return Err(Error::NotConverged {
            iterations: best.iterations,
            residual: best.residual,
        });
    }

    let base = krasnoselskii(f, &center, norm, opts.fp_tol, opts.max_iter)?;
    if !base.converged() {
        return Err(Error::NotConverged {
            iterations: base.iterations,
            residual: base.residual,
        });
    }
    let basepoint = retract_precise(f, &base.point, norm, opts.max_iter)?;
    let g = Translated {
        map: &fp,
        base: basepoint.clone(),
    };
    let f_b = Translated {
        map: f,
        base: basepoint.clone(),
    };
    let translated: Vec<Vector> = fixed_points.iter().map(|x| x - &basepoint).collect();

    let locked = find_locked_sets(&g, norm, &translated, opts.face_tol, opts.separation)?;
    let half = &translated[..translated.len().div_ceil(2)];
    let locked_half = find_locked_sets(&g, norm, half, opts.face_tol, opts.separation)?;
    let coverage = discovery_coverage(starts.len(), translated.len(), &locked, &locked_half);
    let minimal = minimal_locked(&locked);
    let v = v_of_f(norm, &minimal, &translated, opts.check_tol)?;

    let derivative = find_differentiable_point(
        &g,
        norm,
        &v,
        &DerivativeOptions {
            h: opts.fd_step,
            radius: opts.radius,
            retries: opts.retry_budget,
            check_tol: opts.check_tol,
            max_iter: opts.max_iter,
            seed: derive_seed(opts.seed, tags::DERIVATIVE),
        },
    )?;
    let a = &derivative.a;
    let w = image_subspace(a, &v);

    let projection_check = verify_projection(
        a,
        &v,
        norm,
        opts.samples,
        derive_seed(opts.seed, tags::PROJECTION),
        opts.check_tol,
    );
    let isometry_check = verify_isometry(
        &g,
        a,
        &w,
        norm,
        opts.samples,
        derive_seed(opts.seed, tags::ISOMETRY),
        opts.radius,
        opts.fp_tol,
        opts.max_iter,
    )?;
    let functionals = geometry::union_of_faces(&minimal);
    let value_check = value_preservation(
        &g,
        a,
        &v,
        norm,
        &functionals,
        opts.samples,
        derive_seed(opts.seed, tags::VALUES),
        opts.radius,
        opts.fp_tol,
        opts.max_iter,
    )?;
    let separation = separation_check(norm, &translated, &functionals, opts.face_tol);
    let face_translation = geometry::face_translation_check(
        &g,
        norm,
        &minimal,
        opts.samples.div_ceil(8),
        derive_seed(opts.seed, tags::FACES),
        opts.radius,
    )?;

    let norm_projection = match norm.kind() {
        NormKind::Linf => Some(
            projection_linf(&v, 1e-9)
                .map(|p| describe_projection(p, partition_support(&v, 1e-9), &v, norm)),
        ),
        NormKind::L1 => Some(support_of_v(&v, 1e-9).and_then(|support| {
            let p = projection_l1(&support, n)?;
            Ok(describe_projection(p, vec![support], &v, norm))
        })),
        NormKind::Custom => None,
    };

    let linearization = linearize_on_fix(
        &f_b,
        &g,
        a,
        &w,
        norm,
        &LinearizeOptions {
            samples: opts.samples.div_ceil(8),
            seed: derive_seed(opts.seed, tags::LINEARIZE),
            radius: opts.radius,
            fp_tol: opts.fp_tol,
            max_iter: opts.max_iter,
            tol: opts.check_tol,
            order_cap: opts.order_cap,
        },
    );

    let extension = match (&norm_projection, &linearization) {
        (Some(Ok(p)), Ok(lin)) => {
            let m = &lin.ambient * a * &p.matrix;
            let agreement_defect = w
                .basis_vectors()
                .iter()
                .map(|x| (&m * x - &lin.ambient * x).amax())
                .fold(0.0, f64::max);
            Some(Extension {
                opnorm: crate::maps::operator_norm(&m, norm).value,
                matrix: m,
                agreement_defect,
            })
        }
        _ => None,
    };

    Ok(StructureAnalysis {
        power,
        basepoint,
        fixed_points,
        not_converged,
        locked,
        minimal,
        coverage,
        v,
        derivative,
        w,
        projection_check,
        isometry_check,
        value_check,
        separation,
        face_translation,
        norm_projection,
        linearization,
        extension,
    })
}

fn describe_projection(
    p: Matrix,
    classes: Vec<Vec<usize>>,
    v: &Subspace,
    norm: &PolyhedralNorm,
) -> NormProjection {
    let identity_on_v_defect = v
        .basis_vectors()
        .iter()
        .map(|x| (&p * x - x).amax())
        .fold(0.0, f64::max);
    NormProjection {
        classes,
        idempotence_defect: max_abs_entry(&(&p * &p - &p)),
        opnorm: crate::maps::operator_norm(&p, norm).value,
        identity_on_v_defect,
        matrix: p,
    }
}

/// Faces of the translated problem found by the oracle, for comparison with
/// [`StructureAnalysis::minimal`].
pub fn oracle_for<F: SelfMap + ?Sized>(
    f: &F,
    norm: &PolyhedralNorm,
    analysis: &StructureAnalysis,
    radius: f64,
    per_axis: usize,
    opts: &StructureOptions,
) -> Result<OracleResult> {
    let fp = Iterated {
        map: f,
        times: analysis.power,
    };
    let g = Translated {
        map: &fp,
        base: analysis.basepoint.clone(),
    };
    let pool = witness_pool(&g, norm, radius, per_axis, opts.max_iter)?;
    oracle_minimal_locked(&g, norm, &pool, opts.face_tol, opts.separation)
}
