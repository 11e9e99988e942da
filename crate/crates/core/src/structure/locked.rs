//! Locked faces of the dual ball witnessed by pairs of fixed points, their
//! minimal elements, and the subspace `V(f)`.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::maps::SelfMap;
use crate::numerics::{intersect, Subspace, Vector, RANK_TOL};
use crate::polynorm::{DualFace, PolyhedralNorm};

/// Fixed-point pairs closer than this are treated as the same point.
pub const DEFAULT_SEPARATION: f64 = 1e-6;

/// `x ∈ S_E(f)`: `|φ(f(x)) - φ(x)| <= tol * max(1, |x|)` for every φ in `face`.
pub fn s_e_member<F: SelfMap + ?Sized>(
    f: &F,
    norm: &PolyhedralNorm,
    face: &DualFace,
    x: &Vector,
    tol: f64,
) -> Result<bool> {
    Ok(s_e_defect(f, norm, face, x)? <= tol * norm.norm(x).max(1.0))
}

/// `max |φ(f(x)) - φ(x)|` over φ in `face`.
pub fn s_e_defect<F: SelfMap + ?Sized>(
    f: &F,
    norm: &PolyhedralNorm,
    face: &DualFace,
    x: &Vector,
) -> Result<f64> {
    let fx = f.apply(x)?;
    let d = fx - x;
    let extremes = norm.dual_extremes();
    Ok(face
        .indices()
        .iter()
        .map(|&i| extremes[i].dot(&d).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockedSet {
    pub face: DualFace,
    pub witness_v: Vector,
    pub witness_w: Vector,
}

/// One locked face per distinct `J(v - w)` over ordered pairs of fixed points
/// at distance above `separation`, plus the full face from the diagonal pair.
/// Witnesses failing the `S_E` membership test are skipped. Faces are
/// returned in sorted order with the first witness pair found.
pub fn find_locked_sets<F: SelfMap + ?Sized>(
    f: &F,
    norm: &PolyhedralNorm,
    fixed_points: &[Vector],
    tol: f64,
    separation: f64,
) -> Result<Vec<LockedSet>> {
    let Some(first) = fixed_points.first() else {
        return Ok(Vec::new());
    };
    let mut found: BTreeMap<DualFace, LockedSet> = BTreeMap::new();
    found.insert(
        norm.full_face(),
        LockedSet {
            face: norm.full_face(),
            witness_v: first.clone(),
            witness_w: first.clone(),
        },
    );
    for (i, v) in fixed_points.iter().enumerate() {
        for (j, w) in fixed_points.iter().enumerate() {
            if i == j {
                continue;
            }
            let diff = v - w;
            if norm.norm(&diff) <= separation {
                continue;
            }
            let face = norm.duality_map(&diff, tol)?;
            if found.contains_key(&face) {
                continue;
            }
            if !s_e_member(f, norm, &face, v, tol)? || !s_e_member(f, norm, &face, w, tol)? {
                continue;
            }
            found.insert(
                face.clone(),
                LockedSet {
                    face,
                    witness_v: v.clone(),
                    witness_w: w.clone(),
                },
            );
        }
    }
    Ok(found.into_values().collect())
}

/// Sets whose face contains no other listed face as a proper subset.
pub fn minimal_locked(sets: &[LockedSet]) -> Vec<LockedSet> {
    sets.iter()
        .filter(|s| !sets.iter().any(|t| t.face.is_proper_subset(&s.face)))
        .cloned()
        .collect()
}

/// `V(f)`: the intersection of `L_E` over the minimal faces. Every entry of
/// `fixed_points` (in the frame where a fixed point sits at the origin) must
/// lie in it within `tol`, relative to its length.
pub fn v_of_f(
    norm: &PolyhedralNorm,
    minimal: &[LockedSet],
    fixed_points: &[Vector],
    tol: f64,
) -> Result<Subspace> {
    if minimal.is_empty() {
        return Err(Error::InvalidNorm(
            "V(f) needs at least one locked face".into(),
        ));
    }
    let mut v = Subspace::full(norm.dim());
    for set in minimal {
        let l_e = norm.l_e_subspace(&set.face, RANK_TOL)?;
        v = intersect(&v, &l_e, RANK_TOL)?;
    }
    let defect = fixed_points
        .iter()
        .map(|x| v.distance(x) / x.norm().max(1.0))
        .fold(0.0, f64::max);
    if defect > tol {
        return Err(Error::ContainmentViolation { defect });
    }
    Ok(v)
}

/// How thoroughly the locked faces were explored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DiscoveryCoverage {
    pub starts: usize,
    pub fixed_points: usize,
    pub distinct_faces: usize,
    /// No face appeared only among pairs involving the second half of the points.
    pub stabilized: bool,
}

pub fn discovery_coverage(
    starts: usize,
    fixed_points: usize,
    all: &[LockedSet],
    first_half: &[LockedSet],
) -> DiscoveryCoverage {
    let a: BTreeSet<&DualFace> = all.iter().map(|s| &s.face).collect();
    let b: BTreeSet<&DualFace> = first_half.iter().map(|s| &s.face).collect();
    DiscoveryCoverage {
        starts,
        fixed_points,
        distinct_faces: a.len(),
        stabilized: a == b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Activation, Layer, MapSpec};
    use crate::numerics::matrix_from_rows;
    use std::f64::consts::PI;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn sin_curve() -> MapSpec {
        MapSpec::layers(vec![Layer::new(
            matrix_from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap(),
            v(&[0.0, 0.0]),
            vec![Activation::Identity, Activation::Sin],
        )
        .unwrap()])
        .unwrap()
    }

    // ℓ∞ extremes are ordered e1, -e1, e2, -e2, ...
    const E1: usize = 0;
    const NEG_E1: usize = 1;
    const E2: usize = 2;

    fn faces(sets: &[LockedSet]) -> Vec<DualFace> {
        sets.iter().map(|s| s.face.clone()).collect()
    }

    fn locked(face: &[usize]) -> LockedSet {
        LockedSet {
            face: DualFace::new(face.iter().copied()),
            witness_v: v(&[0.0]),
            witness_w: v(&[0.0]),
        }
    }

    #[test]
    fn s_e_member_examples() {
        let n = PolyhedralNorm::linf(2).unwrap();
        let f = sin_curve();
        let e1 = DualFace::new([E1]);
        let e2 = DualFace::new([E2]);
        assert!(s_e_member(&f, &n, &e1, &v(&[1.0, 5.0]), 1e-9).unwrap());
        assert!(s_e_member(&f, &n, &e1, &v(&[-3.0, 0.2]), 1e-9).unwrap());
        assert!(!s_e_member(&f, &n, &e2, &v(&[1.0, 5.0]), 1e-9).unwrap());
        let id = MapSpec::identity(2);
        assert!(s_e_member(&id, &n, &n.full_face(), &v(&[1.0, 5.0]), 1e-9).unwrap());
    }

    #[test]
    fn find_locked_sets_examples() {
        let n = PolyhedralNorm::linf(2).unwrap();
        let fps = [v(&[0.0, 0.0]), v(&[PI, PI.sin()])];
        let sets = find_locked_sets(&sin_curve(), &n, &fps, 1e-9, 1e-6).unwrap();
        let fs = faces(&sets);
        assert!(fs.contains(&DualFace::new([E1])));
        assert!(fs.contains(&DualFace::new([NEG_E1])));
        assert!(fs.contains(&n.full_face()));

        let fps = [v(&[1.0, 0.0]), v(&[0.0, 0.0]), v(&[1.0, 1.0])];
        let fs = faces(&find_locked_sets(&MapSpec::identity(2), &n, &fps, 1e-9, 1e-6).unwrap());
        for face in [vec![E1], vec![E2], vec![E1, E2]] {
            assert!(fs.contains(&DualFace::new(face.clone())), "{face:?}");
        }

        let single = find_locked_sets(&sin_curve(), &n, &[v(&[0.0, 0.0])], 1e-9, 1e-6).unwrap();
        assert_eq!(faces(&single), vec![n.full_face()]);
        assert_eq!(single[0].witness_v, single[0].witness_w);
    }

    #[test]
    fn locked_set_witnesses_satisfy_definition() {
        let n = PolyhedralNorm::linf(2).unwrap();
        let f = sin_curve();
        let fps: Vec<Vector> = [-2.0, -0.5, 0.4, 1.3, 2.9]
            .iter()
            .map(|a: &f64| v(&[*a, a.sin()]))
            .collect();
        for s in find_locked_sets(&f, &n, &fps, 1e-9, 1e-6).unwrap() {
            assert!(s_e_member(&f, &n, &s.face, &s.witness_v, 1e-9).unwrap());
            assert!(s_e_member(&f, &n, &s.face, &s.witness_w, 1e-9).unwrap());
            assert_eq!(
                n.duality_map(&(&s.witness_v - &s.witness_w), 1e-9).unwrap(),
                s.face
            );
        }
    }

    #[test]
    fn minimal_locked_examples() {
        let m = minimal_locked(&[locked(&[0]), locked(&[0, 2])]);
        assert_eq!(faces(&m), vec![DualFace::new([0])]);
        let m = minimal_locked(&[locked(&[0]), locked(&[1])]);
        assert_eq!(m.len(), 2);
        let m = minimal_locked(&[locked(&[0, 2])]);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn v_of_f_examples() {
        let n = PolyhedralNorm::linf(2).unwrap();
        let fps = [v(&[0.0, 0.0]), v(&[PI, 0.0])];
        let v1 = v_of_f(&n, &[locked(&[E1]), locked(&[NEG_E1])], &fps, 1e-8).unwrap();
        assert_eq!(v1.dim(), 2);

        let v0 = v_of_f(&n, &[locked(&[0, 1, 2, 3])], &[v(&[0.0, 0.0])], 1e-8).unwrap();
        assert_eq!(v0.dim(), 0);

        let fps = [v(&[0.0, 0.0]), v(&[1.0, 2.0]), v(&[-3.0, 0.5])];
        let sets = find_locked_sets(&MapSpec::identity(2), &n, &fps, 1e-9, 1e-6).unwrap();
        let full = v_of_f(&n, &minimal_locked(&sets), &fps, 1e-8).unwrap();
        assert_eq!(full.dim(), 2);
    }

    #[test]
    fn v_of_f_reports_containment_violation() {
        let n = PolyhedralNorm::linf(2).unwrap();
        let err = v_of_f(&n, &[locked(&[0, 1, 2, 3])], &[v(&[1.0, 0.0])], 1e-8).unwrap_err();
        assert!(matches!(err, Error::ContainmentViolation { .. }));
    }

    #[test]
    fn coverage_flags_late_faces() {
        let all = [locked(&[0]), locked(&[1])];
        let c = discovery_coverage(4, 4, &all, &all[..1]);
        assert_eq!(c.distinct_faces, 2);
        assert!(!c.stabilized);
        assert!(discovery_coverage(4, 4, &all, &all).stabilized);
    }
}
