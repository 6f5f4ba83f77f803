//! Population states on the probability simplex and linear fitness landscapes.

use crate::error::{Error, Result};
use crate::scalar::{dot, Scalar};

/// A population state: nonnegative frequencies summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint<T> {
    coords: Vec<T>,
}

impl<T: Scalar> SimplexPoint<T> {
    /// Validates `coords` as a simplex point.
    ///
    /// Sums within [`Scalar::renormalize_window`] of one are divided through by
    /// the sum; anything further off, any negative or non-finite coordinate,
    /// or an empty vector is rejected.
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidSimplex("empty coordinate vector".into()));
        }
        if let Some((i, v)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSimplex(format!("coordinate {i} is {v}")));
        }
        if let Some((i, v)) = coords.iter().enumerate().find(|(_, v)| **v < T::zero()) {
            return Err(Error::InvalidSimplex(format!("coordinate {i} is negative ({v})")));
        }
        let sum: T = coords.iter().copied().sum();
        let deviation = (sum - T::one()).abs();
        if deviation >= T::renormalize_window() {
            return Err(Error::InvalidSimplex(format!("coordinates sum to {sum}")));
        }
        let coords = if sum == T::one() {
            coords
        } else {
            coords.into_iter().map(|c| c / sum).collect()
        };
        Ok(Self { coords })
    }

    /// The uniform distribution over `n` types.
    pub fn barycenter(n: usize) -> Self {
        assert!(n > 0, "barycenter of an empty simplex");
        let v = T::one() / T::lit(n as f64);
        Self { coords: vec![v; n] }
    }

    /// The pure population of type `i`.
    pub fn vertex(n: usize, i: usize) -> Self {
        assert!(i < n, "vertex index {i} out of range for n = {n}");
        let mut coords = vec![T::zero(); n];
        coords[i] = T::one();
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }

    pub fn min_coord(&self) -> T {
        self.coords.iter().copied().fold(T::infinity(), T::min)
    }

    /// True when every coordinate is strictly greater than `delta`.
    pub fn is_interior(&self, delta: T) -> bool {
        self.coords.iter().all(|&c| c > delta)
    }
}

impl<T> AsRef<[T]> for SimplexPoint<T> {
    fn as_ref(&self) -> &[T] {
        &self.coords
    }
}

/// A direction in the tangent space of the simplex (components sum to zero).
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<T>(pub Vec<T>);

impl<T: Scalar> TangentVector<T> {
    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn components(&self) -> &[T] {
        &self.0
    }

    pub fn sum(&self) -> T {
        self.0.iter().copied().sum()
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }
}

impl<T> AsRef<[T]> for TangentVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.0
    }
}

/// Square payoff matrix `A` defining the linear fitness `f(x) = A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixLandscape<T> {
    n: usize,
    // row-major
    entries: Vec<T>,
}

impl<T: Scalar> MatrixLandscape<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidLandscape(format!("need at least 2 types, got {n}")));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidLandscape(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidLandscape(format!("row {i} has a non-finite entry")));
            }
            entries.extend(row);
        }
        Ok(Self { n, entries })
    }

    /// The 3×3 cyclic matrix with zero diagonal and rows `(0,a,b), (b,0,a), (a,b,0)`.
    ///
    /// `a = 1, b = -1` is rock-paper-scissors; `a = b > 0` is a three-type
    /// hawk-dove game with the barycenter as its ESS.
    pub fn cyclic(a: T, b: T) -> Self {
        let z = T::zero();
        Self {
            n: 3,
            entries: vec![z, a, b, b, z, a, a, b, z],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.entries.chunks_exact(self.n)
    }

    pub fn is_skew_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.entry(i, j) == -self.entry(j, i)))
    }

    /// `A x` for any vector of matching length, on or off the simplex.
    pub fn fitness(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(self.rows().map(|row| dot(row, x)).collect())
    }
}

/// Population-weighted mean fitness `x · f`.
pub fn mean_fitness_weighted<T: Scalar>(x: &[T], f: &[T]) -> Result<T> {
    if x.len() != f.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: f.len(),
        });
    }
    Ok(dot(x, f))
}

/// Unweighted average fitness `(1/n) Σ f_k`. NaN for an empty slice.
pub fn mean_fitness_uniform<T: Scalar>(f: &[T]) -> T {
    let sum: T = f.iter().copied().sum();
    sum / T::lit(f.len() as f64)
}
