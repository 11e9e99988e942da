//! Seeded sampling helpers. Every draw indexed by `i` comes from its own
//! ChaCha stream, so results do not depend on evaluation order or threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::{Subspace, Vector};

/// RNG for item `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sub-seed for an independent purpose (`tag`) derived from a run seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // SplitMix64 finalizer.
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform point of the box `center + [-radius, radius]^n`.
pub fn box_point<R: Rng>(rng: &mut R, center: &Vector, radius: f64) -> Vector {
    Vector::from_fn(center.len(), |i, _| {
        center[i] + radius * rng.random_range(-1.0..=1.0)
    })
}

/// `count` uniform points of the box, point `i` drawn from stream `i`.
pub fn box_points(center: &Vector, radius: f64, count: usize, seed: u64) -> Vec<Vector> {
    (0..count)
        .map(|i| box_point(&mut stream(seed, i as u64), center, radius))
        .collect()
}

/// Point of `s` with coordinates uniform in `[-radius, radius]` along its basis.
pub fn subspace_point<R: Rng>(rng: &mut R, s: &Subspace, radius: f64) -> Vector {
    let coords: Vec<f64> = (0..s.dim())
        .map(|_| radius * rng.random_range(-1.0..=1.0))
        .collect();
    s.point(&coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_points_are_reproducible_and_inside() {
        let c = Vector::from_column_slice(&[1.0, -2.0]);
        let a = box_points(&c, 0.5, 20, 7);
        assert_eq!(a, box_points(&c, 0.5, 20, 7));
        assert_ne!(a, box_points(&c, 0.5, 20, 8));
        assert!(a.iter().all(|p| (p - &c).amax() <= 0.5));
        // A prefix does not depend on how many points are requested.
        assert_eq!(&a[..5], &box_points(&c, 0.5, 5, 7)[..]);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
