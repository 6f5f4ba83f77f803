//! Deterministic point sets on the simplex.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::scalar::Scalar;
use crate::simplex::SimplexPoint;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Start index of the Halton sequence used by [`ball_samples`].
pub const HALTON_START: u64 = 1;

/// Van der Corput radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// Orthonormal basis of the sum-zero hyperplane in `R^n` (Helmert contrasts).
pub fn tangent_basis(n: usize) -> Vec<Vec<f64>> {
    (1..n)
        .map(|k| {
            let norm = ((k * (k + 1)) as f64).sqrt();
            let mut v = vec![0.0; n];
            v[..k].iter_mut().for_each(|c| *c = 1.0 / norm);
            v[k] = -(k as f64) / norm;
            v
        })
        .collect()
}

/// Up to `count` quasi-uniform points of the simplex lying in the Euclidean
/// ball of `radius` around `center`, excluding the center itself.
///
/// Halton points in the cube `[-1, 1]^(n-1)` are mapped through the tangent
/// basis; points outside the ball or outside the simplex are skipped. Fewer
/// than `count` points come back only if the acceptance rate is pathological.
pub fn ball_samples<T: Scalar>(center: &SimplexPoint<T>, radius: f64, count: usize) -> Vec<SimplexPoint<T>> {
    let n = center.dim();
    assert!(
        n >= 2 && n - 1 <= PRIMES.len(),
        "ball sampling supports 2..={} types",
        PRIMES.len() + 1
    );
    let basis = tangent_basis(n);
    let c: Vec<f64> = center.coords().iter().map(|v| v.as_f64()).collect();
    let max_attempts = 1000 * count as u64 + 1000;

    let mut out = Vec::with_capacity(count);
    let mut index = HALTON_START;
    while out.len() < count && index < HALTON_START + max_attempts {
        let cube: Vec<f64> = PRIMES[..n - 1]
            .iter()
            .map(|&p| 2.0 * radical_inverse(index, p) - 1.0)
            .collect();
        index += 1;
        let r2: f64 = cube.iter().map(|v| v * v).sum();
        if r2 > 1.0 || r2 == 0.0 {
            continue;
        }
        let point: Vec<f64> = (0..n)
            .map(|i| c[i] + radius * cube.iter().zip(&basis).map(|(w, b)| w * b[i]).sum::<f64>())
            .collect();
        if point.iter().any(|&v| v < 0.0) {
            continue;
        }
        if let Ok(p) = SimplexPoint::new(point.into_iter().map(T::lit).collect()) {
            if p != *center {
                out.push(p);
            }
        }
    }
    out
}

/// Seeded uniform points in the open simplex (normalized exponential draws).
pub fn random_interior_points<T: Scalar>(n: usize, count: usize, seed: u64) -> Vec<SimplexPoint<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let draws: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = draws.iter().sum();
        if draws.iter().any(|&d| d <= 0.0) || total <= 0.0 {
            continue;
        }
        let coords = draws.into_iter().map(|d| T::lit(d / total)).collect();
        if let Ok(p) = SimplexPoint::new(coords) {
            out.push(p);
        }
    }
    out
}
