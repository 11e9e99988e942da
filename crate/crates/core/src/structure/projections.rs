//! Nonexpansive linear projections onto `V` for the ∞-norm and the 1-norm.
//! Coordinates are 0-based.

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Subspace};

/// Partition of `0..n` into maximal classes on which `|x_i| = |x_j|` for all
/// `x ∈ V`. With an orthonormal basis `B` of `V`, that holds exactly when
/// rows `i` and `j` of `B` agree up to sign. Classes and their members are
/// sorted.
pub fn partition_support(v: &Subspace, tol: f64) -> Vec<Vec<usize>> {
    let n = v.ambient_dim();
    let b = v.basis();
    let same_up_to_sign = |i: usize, j: usize| {
        let plus = (b.row(i) - b.row(j)).amax();
        let minus = (b.row(i) + b.row(j)).amax();
        plus.min(minus) <= tol
    };
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        match classes.iter_mut().find(|c| same_up_to_sign(c[0], i)) {
            Some(class) => class.push(i),
            None => classes.push(vec![i]),
        }
    }
    classes
}

/// `P = Σ_k v_k v_kᵀ / |I_k|` over the classes `I_k` of [`partition_support`],
/// where `v_k ∈ V` has entries `±1` on `I_k` and zeros elsewhere (or is zero
/// when `V` vanishes on `I_k`). Fails unless the nonzero `v_k` span `V`.
pub fn projection_linf(v: &Subspace, tol: f64) -> Result<Matrix> {
    let n = v.ambient_dim();
    let b = v.basis();
    let mut p = Matrix::zeros(n, n);
    let mut pattern_vectors = Vec::new();
    for class in partition_support(v, tol) {
        let lead = class[0];
        if b.row(lead).amax() <= tol {
            continue;
        }
        let mut pattern = crate::numerics::Vector::zeros(n);
        for &i in &class {
            let same = (b.row(i) - b.row(lead)).amax() <= tol;
            pattern[i] = if same { 1.0 } else { -1.0 };
        }
        p += &pattern * pattern.transpose() / class.len() as f64;
        pattern_vectors.push(pattern);
    }
    let span = Subspace::span_of_vectors(n, &pattern_vectors, tol);
    let defect = subspace_defect(&span, v);
    if defect > tol.max(1e-9) {
        return Err(Error::StructureMismatch { defect });
    }
    Ok(p)
}

/// Coordinate projection onto `support`.
pub fn projection_l1(support: &[usize], n: usize) -> Result<Matrix> {
    let mut p = Matrix::zeros(n, n);
    for &i in support {
        if i >= n {
            return Err(Error::OutOfRange {
                what: "coordinate",
                value: i,
                min: 0,
                max: n.saturating_sub(1),
            });
        }
        p[(i, i)] = 1.0;
    }
    Ok(p)
}

/// Coordinates not identically zero on `V`; fails unless `V` is exactly the
/// coordinate subspace on them.
pub fn support_of_v(v: &Subspace, tol: f64) -> Result<Vec<usize>> {
    let n = v.ambient_dim();
    let b = v.basis();
    let support: Vec<usize> = (0..n).filter(|&i| b.row(i).amax() > tol).collect();
    let coordinate = Subspace::span_of_vectors(
        n,
        &support
            .iter()
            .map(|&i| crate::numerics::Vector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect::<Vec<_>>(),
        tol,
    );
    let defect = subspace_defect(&coordinate, v);
    if defect > tol.max(1e-9) {
        return Err(Error::StructureMismatch { defect });
    }
    Ok(support)
}

/// Largest entry of the difference of the orthogonal projectors.
fn subspace_defect(a: &Subspace, b: &Subspace) -> f64 {
    (a.projector() - b.projector()).amax()
}
