//! Divergences from an equilibrium, their rates of change, and ESS checks.
//!
//! All logarithms are natural.

use crate::error::{Error, Result};
use crate::sampling::ball_samples;
use crate::scalar::{dot, Scalar};
use crate::simplex::{MatrixLandscape, SimplexPoint};

fn same_dim<T>(a: &SimplexPoint<T>, b: &SimplexPoint<T>) -> Result<()>
where
    T: Scalar,
{
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

fn check_support<T: Scalar>(reference: &SimplexPoint<T>, x: &SimplexPoint<T>) -> Result<()> {
    match reference
        .coords()
        .iter()
        .zip(x.coords())
        .position(|(&r, &v)| r > T::zero() && v <= T::zero())
    {
        Some(index) => Err(Error::SupportViolation { index }),
        None => Ok(()),
    }
}

/// `D(x̂‖x) = Σ x̂_i ln(x̂_i / x_i)`, skipping terms with `x̂_i = 0`.
pub fn kl_divergence<T: Scalar>(reference: &SimplexPoint<T>, x: &SimplexPoint<T>) -> Result<T> {
    same_dim(reference, x)?;
    check_support(reference, x)?;
    let sum: T = reference
        .coords()
        .iter()
        .zip(x.coords())
        .filter(|(&r, _)| r > T::zero())
        .map(|(&r, &v)| r * (r / v).ln())
        .sum();
    // rounding can push an exact zero slightly negative
    Ok(sum.max(T::zero()))
}

/// `½ ‖x̂ − x‖²`, the projection dynamic's Lyapunov function.
pub fn euclidean_half_sq<T: Scalar>(reference: &SimplexPoint<T>, x: &SimplexPoint<T>) -> Result<T> {
    same_dim(reference, x)?;
    let sq: T = reference
        .coords()
        .iter()
        .zip(x.coords())
        .map(|(&r, &v)| (r - v) * (r - v))
        .sum();
    Ok(sq / T::lit(2.0))
}

/// Rate of change of `D(x̂‖x)` along the continuous momentum replicator:
/// `(x·f(x) − x̂·f(x)) / (1 − β)`.
pub fn kl_time_derivative<T: Scalar>(
    landscape: &MatrixLandscape<T>,
    reference: &SimplexPoint<T>,
    x: &SimplexPoint<T>,
    beta: T,
) -> Result<T> {
    same_dim(reference, x)?;
    if (T::one() - beta).abs() < T::lit(1e-9) {
        return Err(Error::BetaSingularity { beta: beta.as_f64() });
    }
    let f = landscape.fitness(x.coords())?;
    let rate = dot(x.coords(), &f) - dot(reference.coords(), &f);
    Ok(rate / (T::one() - beta))
}

fn step_pair_checks<T: Scalar>(
    reference: &SimplexPoint<T>,
    x: &SimplexPoint<T>,
    x_next: &SimplexPoint<T>,
    alpha: T,
) -> Result<()> {
    same_dim(reference, x)?;
    same_dim(reference, x_next)?;
    if !(alpha > T::zero()) {
        return Err(Error::InvalidConfig {
            field: "alpha",
            reason: format!("must be positive, got {alpha}"),
        });
    }
    check_support(reference, x)?;
    check_support(reference, x_next)
}

/// Discrete rate `(D(x̂‖x') − D(x̂‖x)) / α` over one step.
///
/// Evaluated as `−Σ x̂_i ln(x'_i / x_i) / α`, which avoids differencing two
/// nearly equal divergences.
pub fn discrete_lyapunov_quotient<T: Scalar>(
    reference: &SimplexPoint<T>,
    x: &SimplexPoint<T>,
    x_next: &SimplexPoint<T>,
    alpha: T,
) -> Result<T> {
    step_pair_checks(reference, x, x_next, alpha)?;
    let s: T = reference
        .coords()
        .iter()
        .zip(x.coords().iter().zip(x_next.coords()))
        .filter(|(&r, _)| r > T::zero())
        .map(|(&r, (&a, &b))| r * (b / a).ln())
        .sum();
    Ok(-s / alpha)
}

/// `−ln(Σ x̂_i x'_i / x_i) / α`.
///
/// By concavity of the logarithm this never exceeds
/// [`discrete_lyapunov_quotient`]; the two coincide when the ratios
/// `x'_i / x_i` are constant on the support of `x̂` (in particular for a
/// reference concentrated on a single type).
pub fn jensen_bound<T: Scalar>(
    reference: &SimplexPoint<T>,
    x: &SimplexPoint<T>,
    x_next: &SimplexPoint<T>,
    alpha: T,
) -> Result<T> {
    step_pair_checks(reference, x, x_next, alpha)?;
    let s: T = reference
        .coords()
        .iter()
        .zip(x.coords().iter().zip(x_next.coords()))
        .filter(|(&r, _)| r > T::zero())
        .map(|(&r, (&a, &b))| r * (b / a))
        .sum();
    if !(s > T::zero()) {
        return Err(Error::NonpositiveArgument { value: s.as_f64() });
    }
    Ok(-s.ln() / alpha)
}

/// Outcome of a sampled ESS check.
#[derive(Debug, Clone, PartialEq)]
pub struct EssReport<T> {
    pub candidate: SimplexPoint<T>,
    pub is_strict_ess: bool,
    /// Smallest `x̂·f(x) − x·f(x)` over the tested points; values within
    /// [`Scalar::margin_tolerance`] of zero are reported as exactly zero.
    pub worst_margin: T,
    pub samples_tested: usize,
    pub radius: T,
}

/// Checks the ESS inequality `x̂·f(x) > x·f(x)` on `samples` quasi-uniform
/// points of the simplex within `radius` of `candidate`.
pub fn verify_ess<T: Scalar>(
    landscape: &MatrixLandscape<T>,
    candidate: &SimplexPoint<T>,
    radius: T,
    samples: usize,
) -> Result<EssReport<T>> {
    if candidate.dim() != landscape.dim() {
        return Err(Error::DimensionMismatch {
            expected: landscape.dim(),
            found: candidate.dim(),
        });
    }
    if !(radius > T::zero()) {
        return Err(Error::InvalidConfig {
            field: "radius",
            reason: format!("must be positive, got {radius}"),
        });
    }
    if samples < 1 {
        return Err(Error::InvalidConfig {
            field: "samples",
            reason: "must be at least 1".into(),
        });
    }

    let points = ball_samples(candidate, radius.as_f64(), samples);
    let mut worst = T::infinity();
    for x in &points {
        let m = ess_margin(landscape, candidate, x)?;
        worst = worst.min(m);
    }
    if points.is_empty() {
        worst = T::nan();
    }
    Ok(EssReport {
        candidate: candidate.clone(),
        is_strict_ess: !points.is_empty() && worst > T::zero(),
        worst_margin: worst,
        samples_tested: points.len(),
        radius,
    })
}

/// `x̂·f(x) − x·f(x)`, snapped to zero inside the margin tolerance.
pub fn ess_margin<T: Scalar>(
    landscape: &MatrixLandscape<T>,
    candidate: &SimplexPoint<T>,
    x: &SimplexPoint<T>,
) -> Result<T> {
    let f = landscape.fitness(x.coords())?;
    let m = dot(candidate.coords(), &f) - dot(x.coords(), &f);
    Ok(if m.abs() <= T::margin_tolerance() { T::zero() } else { m })
}
