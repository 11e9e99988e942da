//! Brute-force locked-face search for small ℓ∞ and ℓ1 problems: every face
//! of the dual ball is tested against a dense pool of witnesses.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::dynamics::retract_precise;
use crate::error::{Error, Result};
use crate::maps::SelfMap;
use crate::numerics::{Vector, RANK_TOL};
use crate::polynorm::{DualFace, NormKind, PolyhedralNorm};

use super::locked::s_e_member;

/// Largest dimension the oracle accepts.
pub const ORACLE_MAX_DIM: usize = 4;

/// All faces of the dual unit ball as index sets, including the full set.
///
/// - ℓ∞ (extremes `±e_i`): choose for each coordinate `+`, `-` or absent.
/// - ℓ1 (extremes are sign vectors): fix each coordinate's sign or leave it free.
pub fn enumerate_faces(norm: &PolyhedralNorm) -> Result<Vec<DualFace>> {
    let n = norm.dim();
    if n > ORACLE_MAX_DIM {
        return Err(Error::OutOfRange {
            what: "oracle dimension",
            value: n,
            min: 1,
            max: ORACLE_MAX_DIM,
        });
    }
    let patterns = 3usize.pow(n as u32);
    let mut faces = BTreeSet::new();
    for code in 0..patterns {
        let choice: Vec<usize> = (0..n).map(|i| code / 3usize.pow(i as u32) % 3).collect();
        let face = match norm.kind() {
            // choice 0: absent, 1: +e_i (index 2i), 2: -e_i (index 2i + 1).
            NormKind::Linf => DualFace::new(
                choice
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != 0)
                    .map(|(i, c)| 2 * i + c - 1),
            ),
            // choice 0: free, 1: coordinate positive, 2: coordinate negative.
            // Bit i of an ℓ1 extreme's index set means coordinate i is negative.
            NormKind::L1 => DualFace::new((0..1usize << n).filter(|idx| {
                choice.iter().enumerate().all(|(i, c)| match c {
                    1 => idx >> i & 1 == 0,
                    2 => idx >> i & 1 == 1,
                    _ => true,
                })
            })),
            NormKind::Custom => {
                return Err(Error::Unsupported(
                    "face enumeration needs the ℓ∞ or ℓ1 norm".into(),
                ))
            }
        };
        if !face.is_empty() {
            faces.insert(face);
        }
    }
    faces.insert(norm.full_face());
    Ok(faces.into_iter().collect())
}

/// Grid of `per_axis^n` points in `[-radius, radius]^n` together with their
/// retracts under `g`, deduplicated.
pub fn witness_pool<F: SelfMap + ?Sized>(
    g: &F,
    norm: &PolyhedralNorm,
    radius: f64,
    per_axis: usize,
    max_iter: usize,
) -> Result<Vec<Vector>> {
    let n = norm.dim();
    let per_axis = per_axis.max(2);
    let total = per_axis.pow(n as u32);
    let step = 2.0 * radius / (per_axis - 1) as f64;
    let mut pool = Vec::with_capacity(2 * total);
    for code in 0..total {
        let x = Vector::from_fn(n, |i, _| {
            let k = code / per_axis.pow(i as u32) % per_axis;
            -radius + step * k as f64
        });
        pool.push(retract_precise(g, &x, norm, max_iter)?);
        pool.push(x);
    }
    let mut seen = BTreeSet::new();
    pool.retain(|x| {
        let key: Vec<i64> = x.iter().map(|v| (v * 1e9).round() as i64).collect();
        seen.insert(key)
    });
    Ok(pool)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub faces_enumerated: usize,
    pub faces_tested: usize,
    pub pool_size: usize,
    pub minimal: Vec<DualFace>,
}

/// Minimal locked faces among all faces of the dual ball, with `S_E` sampled
/// by `pool`. Faces are visited by size; a face with a locked proper subface
/// cannot be minimal and is skipped. The full face counts as locked through
/// the diagonal pair.
pub fn oracle_minimal_locked<F: SelfMap + ?Sized>(
    g: &F,
    norm: &PolyhedralNorm,
    pool: &[Vector],
    tol: f64,
    separation: f64,
) -> Result<OracleResult> {
    let mut faces = enumerate_faces(norm)?;
    faces.sort_by_key(|f| f.len());
    let full = norm.full_face();
    let mut locked: Vec<DualFace> = Vec::new();
    let mut tested = 0;
    for face in &faces {
        if locked.iter().any(|l| l.is_proper_subset(face)) {
            continue;
        }
        tested += 1;
        let is_locked = *face == full || has_witness_pair(g, norm, face, pool, tol, separation)?;
        if is_locked {
            locked.push(face.clone());
        }
    }
    locked.sort();
    Ok(OracleResult {
        faces_enumerated: faces.len(),
        faces_tested: tested,
        pool_size: pool.len(),
        minimal: locked,
    })
}

fn has_witness_pair<F: SelfMap + ?Sized>(
    g: &F,
    norm: &PolyhedralNorm,
    face: &DualFace,
    pool: &[Vector],
    tol: f64,
    separation: f64,
) -> Result<bool> {
    let mut members = Vec::new();
    for x in pool {
        if s_e_member(g, norm, face, x, tol)? {
            members.push(x);
        }
    }
    let extremes: Vec<Vec<f64>> = norm
        .dual_extremes()
        .iter()
        .map(|e| e.iter().copied().collect())
        .collect();
    let mut diff = vec![0.0; norm.dim()];
    let mut values = vec![0.0; extremes.len()];
    for v in &members {
        for w in &members {
            for (d, (a, b)) in diff.iter_mut().zip(v.iter().zip(w.iter())) {
                *d = a - b;
            }
            for (val, e) in values.iter_mut().zip(&extremes) {
                *val = e.iter().zip(&diff).map(|(p, d)| p * d).sum();
            }
            let top = values.iter().copied().fold(0.0, f64::max);
            if top <= separation {
                continue;
            }
            let threshold = top - tol * top.max(1.0);
            let matches = values
                .iter()
                .enumerate()
                .all(|(i, val)| (*val >= threshold) == face.contains(i));
            if matches {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Largest distance from a pool member of `S_E` to `w + L_E`, for a locked
/// face `E` with witness `w`, relative to `max(1, |x|)`.
pub fn s_e_affine_defect<F: SelfMap + ?Sized>(
    g: &F,
    norm: &PolyhedralNorm,
    face: &DualFace,
    witness: &Vector,
    pool: &[Vector],
    tol: f64,
) -> Result<f64> {
    let l_e = norm.l_e_subspace(face, RANK_TOL)?;
    let mut worst: f64 = 0.0;
    for x in pool {
        if s_e_member(g, norm, face, x, tol)? {
            worst = worst.max(l_e.distance(&(x - witness)) / x.norm().max(1.0));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Activation, Layer, MapSpec};
    use crate::numerics::{matrix_from_rows, Matrix};

    #[test]
    fn face_counts() {
        // 3^n - 1 proper faces plus the full face.
        let linf3 = PolyhedralNorm::linf(3).unwrap();
        assert_eq!(enumerate_faces(&linf3).unwrap().len(), 27);
        let l1_2 = PolyhedralNorm::l1(2).unwrap();
        let faces = enumerate_faces(&l1_2).unwrap();
        assert_eq!(faces.len(), 9);
        assert!(faces.contains(&DualFace::new([0, 1, 2, 3])));
        // Faces of a cube: vertices, edges, and the cube itself.
        assert_eq!(faces.iter().filter(|f| f.len() == 1).count(), 4);
        assert_eq!(faces.iter().filter(|f| f.len() == 2).count(), 4);
    }

    #[test]
    fn every_enumerated_linf_face_is_a_duality_image() {
        let n = PolyhedralNorm::linf(2).unwrap();
        for face in enumerate_faces(&n).unwrap() {
            let mut x = Vector::zeros(2);
            if face != n.full_face() {
                for &i in face.indices() {
                    x[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                }
            }
            assert_eq!(n.duality_map(&x, 1e-9).unwrap(), face);
        }
    }

    #[test]
    fn oracle_on_identity_and_sin_curve() {
        let n = PolyhedralNorm::linf(2).unwrap();
        let id = MapSpec::identity(2);
        let pool = witness_pool(&id, &n, 2.0, 5, 100).unwrap();
        let r = oracle_minimal_locked(&id, &n, &pool, 1e-9, 1e-6).unwrap();
        assert_eq!(
            r.minimal,
            (0..4).map(|i| DualFace::new([i])).collect::<Vec<_>>()
        );

        let sin_curve = MapSpec::layers(vec![Layer::new(
            matrix_from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap(),
            Vector::zeros(2),
            vec![Activation::Identity, Activation::Sin],
        )
        .unwrap()])
        .unwrap();
        let pool = witness_pool(&sin_curve, &n, 3.0, 7, 2000).unwrap();
        let r = oracle_minimal_locked(&sin_curve, &n, &pool, 1e-9, 1e-6).unwrap();
        assert_eq!(r.minimal, vec![DualFace::new([0]), DualFace::new([1])]);
    }

    #[test]
    fn oracle_unique_fixed_point_gives_full_face() {
        let n = PolyhedralNorm::linf(2).unwrap();
        let avg = MapSpec::linear(Matrix::from_row_slice(2, 2, &[0.5, -0.5, 0.5, 0.5])).unwrap();
        let pool = witness_pool(&avg, &n, 2.0, 7, 5000).unwrap();
        let r = oracle_minimal_locked(&avg, &n, &pool, 1e-9, 1e-6).unwrap();
        assert_eq!(r.minimal, vec![n.full_face()]);
    }

    #[test]
    fn oracle_rejects_custom_norms() {
        let hex = PolyhedralNorm::custom(
            vec![
                Vector::from_column_slice(&[1.0, 0.0]),
                Vector::from_column_slice(&[-1.0, 0.0]),
                Vector::from_column_slice(&[0.0, 1.0]),
                Vector::from_column_slice(&[0.0, -1.0]),
                Vector::from_column_slice(&[1.0, 1.0]),
                Vector::from_column_slice(&[-1.0, -1.0]),
            ],
            1e-9,
        )
        .unwrap();
        assert!(matches!(enumerate_faces(&hex), Err(Error::Unsupported(_))));
    }
}
