//! Named measurements over families of runs: step-count ratios across
//! momentum values, monotonicity of the Lyapunov series, cycling verdicts on
//! zero-sum landscapes, and the `1/(1 − β)` rate-scaling identity.
//!
//! Each `(β, run)` cell is independent and is evaluated in parallel; results
//! are always assembled in the order of the input `betas`.

use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dynamics::{iterate, DynamicKind, DynamicsConfig, Status, Trajectory};
use crate::error::{Error, Result};
use crate::lyapunov::kl_time_derivative;
use crate::sampling::random_interior_points;
use crate::simplex::{MatrixLandscape, SimplexPoint};

/// Relative tolerance on `|ratio − (1 − β)|` used by the sweep checks.
pub const RATIO_TOLERANCE: f64 = 0.1;
/// Per-step slack when deciding whether a Lyapunov series increased.
pub const MONOTONE_TOLERANCE: f64 = 1e-12;
/// Window-mean slope (KL per step) separating cycling from drift.
pub const SLOPE_TOLERANCE: f64 = 1e-9;

/// Starting state used by every named experiment.
pub fn default_x0() -> SimplexPoint<f64> {
    SimplexPoint::new(vec![0.8, 0.15, 0.05]).expect("valid default state")
}

fn lyapunov_series(config: &DynamicsConfig<f64>, t: &Trajectory<f64>) -> Vec<f64> {
    match config.dynamic {
        DynamicKind::Replicator => t.kl_series(),
        DynamicKind::Projection => t.euclidean_series(),
    }
}

/// Steps until the dynamic's Lyapunov value drops below `convergence_epsilon`.
pub fn convergence_time(
    config: &DynamicsConfig<f64>,
    landscape: &MatrixLandscape<f64>,
    x0: &SimplexPoint<f64>,
    reference: &SimplexPoint<f64>,
) -> Result<u64> {
    let quiet = DynamicsConfig {
        record_every: u64::MAX,
        ..config.clone()
    };
    let t = iterate(&quiet, landscape, x0, Some(reference))?;
    match t.status {
        Status::Converged => Ok(t.last().map(|r| r.step).unwrap_or(0)),
        status => Err(Error::DidNotConverge { status, beta: None }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub beta: f64,
    pub steps: u64,
    /// `steps(β) / steps(0)`
    pub ratio: f64,
    /// `1 − β`
    pub predicted: f64,
}

impl SweepRow {
    /// `|ratio − (1 − β)| / (1 − β)`
    pub fn relative_deviation(&self) -> f64 {
        (self.ratio - self.predicted).abs() / self.predicted.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub base_steps: u64,
    pub config_digest: String,
}

/// SHA-256 over a canonical description of a run family.
pub fn config_digest(
    config: &DynamicsConfig<f64>,
    landscape: &MatrixLandscape<f64>,
    x0: &SimplexPoint<f64>,
    reference: Option<&SimplexPoint<f64>>,
    extra: &str,
) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "dynamic={};momentum={};alpha={:?};beta={:?};normalize={};max_steps={};epsilon={:?};boundary_delta={:?};",
        config.dynamic,
        config.momentum,
        config.learning_rate,
        config.momentum_coefficient,
        config.normalize_by_mean,
        config.max_steps,
        config.convergence_epsilon,
        config.boundary_delta,
    );
    let _ = write!(
        s,
        "matrix={:?};x0={:?};",
        landscape.rows().collect::<Vec<_>>(),
        x0.coords()
    );
    if let Some(r) = reference {
        let _ = write!(s, "reference={:?};", r.coords());
    }
    s.push_str(extra);
    hex::encode(Sha256::digest(s.as_bytes()))
}

fn check_betas(betas: &[f64]) -> Result<()> {
    match betas.iter().find(|b| !b.is_finite() || **b >= 1.0) {
        Some(b) => Err(Error::InvalidConfig {
            field: "betas",
            reason: format!("every beta must be finite and below 1, got {b}"),
        }),
        None => Ok(()),
    }
}

/// Convergence steps for each β against the β = 0 baseline.
pub fn beta_sweep_ratio(
    base: &DynamicsConfig<f64>,
    landscape: &MatrixLandscape<f64>,
    x0: &SimplexPoint<f64>,
    reference: &SimplexPoint<f64>,
    betas: &[f64],
) -> Result<SweepResult> {
    check_betas(betas)?;
    let run = |beta: f64| {
        convergence_time(&base.with_beta(beta), landscape, x0, reference).map_err(|e| match e {
            Error::DidNotConverge { status, .. } => Error::DidNotConverge {
                status,
                beta: Some(beta),
            },
            other => other,
        })
    };

    let base_steps = run(0.0)?;
    let steps: Vec<u64> = betas
        .par_iter()
        .map(|&b| if b == 0.0 { Ok(base_steps) } else { run(b) })
        .collect::<Result<_>>()?;

    let rows = betas
        .iter()
        .zip(steps)
        .map(|(&beta, steps)| {
            let ratio = if steps == base_steps {
                1.0
            } else {
                steps as f64 / base_steps as f64
            };
            SweepRow {
                beta,
                steps,
                ratio,
                predicted: 1.0 - beta,
            }
        })
        .collect();
    let extra = format!("sweep_betas={betas:?}");
    Ok(SweepResult {
        rows,
        base_steps,
        config_digest: config_digest(base, landscape, x0, Some(reference), &extra),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityRow {
    pub beta: f64,
    pub monotone: bool,
    /// Step index at which the Lyapunov value first rose.
    pub first_violation_step: Option<u64>,
    pub status: Status,
}

/// Whether the Lyapunov series is non-increasing over the whole run, per β.
pub fn monotonicity_scan(
    base: &DynamicsConfig<f64>,
    landscape: &MatrixLandscape<f64>,
    x0: &SimplexPoint<f64>,
    reference: &SimplexPoint<f64>,
    betas: &[f64],
) -> Result<Vec<MonotonicityRow>> {
    betas
        .par_iter()
        .map(|&beta| {
            let config = DynamicsConfig {
                record_every: 1,
                ..base.with_beta(beta)
            };
            let t = iterate(&config, landscape, x0, Some(reference))?;
            let series = lyapunov_series(&config, &t);
            let first_violation_step = series
                .windows(2)
                .position(|w| w[1] > w[0] + MONOTONE_TOLERANCE)
                .map(|i| t.records[i + 1].step);
            Ok(MonotonicityRow {
                beta,
                monotone: first_violation_step.is_none(),
                first_violation_step,
                status: t.status,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CyclingClass {
    Converging,
    Diverging,
    Cycling,
}

impl CyclingClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CyclingClass::Converging => "Converging",
            CyclingClass::Diverging => "Diverging",
            CyclingClass::Cycling => "Cycling",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CyclingVerdict {
    pub classification: CyclingClass,
    pub kl_start: f64,
    pub kl_end: f64,
    /// Least-squares slope of window-mean KL against step index.
    pub kl_trend_slope: f64,
    pub status: Status,
    pub steps_run: u64,
}

/// Least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (num, den) = xs.iter().zip(ys).fold((0.0, 0.0), |(num, den), (&x, &y)| {
        (num + (x - mx) * (y - my), den + (x - mx) * (x - mx))
    });
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Classifies a zero-sum run as spiralling in, out, or cycling, from the
/// trend of window-averaged KL divergence to the barycenter.
pub fn classify_cycling(
    config: &DynamicsConfig<f64>,
    landscape: &MatrixLandscape<f64>,
    x0: &SimplexPoint<f64>,
    total_steps: u64,
    window: usize,
) -> Result<CyclingVerdict> {
    if !landscape.is_skew_symmetric() {
        return Err(Error::InvalidLandscape(
            "cycling classification needs a zero-sum (skew-symmetric) landscape".into(),
        ));
    }
    if window < 1 || total_steps < 1 {
        return Err(Error::InvalidConfig {
            field: "window",
            reason: "window and total_steps must be at least 1".into(),
        });
    }
    let run_config = DynamicsConfig {
        max_steps: total_steps,
        record_every: 1,
        ..config.clone()
    };
    let reference = SimplexPoint::barycenter(landscape.dim());
    let t = iterate(&run_config, landscape, x0, Some(&reference))?;

    let kl = t.kl_series();
    let steps: Vec<f64> = t.records.iter().map(|r| r.step as f64).collect();
    let (centers, means): (Vec<f64>, Vec<f64>) = kl
        .chunks_exact(window)
        .zip(steps.chunks_exact(window))
        .map(|(k, s)| {
            (
                s.iter().sum::<f64>() / s.len() as f64,
                k.iter().sum::<f64>() / k.len() as f64,
            )
        })
        .unzip();

    let kl_start = kl[0];
    let kl_end = *kl.last().expect("trajectory has at least one record");
    let steps_run = t.last().map(|r| r.step).unwrap_or(0);
    let slope = if means.len() >= 2 {
        ols_slope(&centers, &means)
    } else if steps_run > 0 && kl_end.is_finite() {
        (kl_end - kl_start) / steps_run as f64
    } else {
        0.0
    };

    let classification = if t.status == Status::Diverged || slope > SLOPE_TOLERANCE {
        CyclingClass::Diverging
    } else if slope < -SLOPE_TOLERANCE {
        CyclingClass::Converging
    } else {
        CyclingClass::Cycling
    };
    Ok(CyclingVerdict {
        classification,
        kl_start,
        kl_end,
        kl_trend_slope: slope,
        status: t.status,
        steps_run,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub beta: f64,
    /// `dV_β/dt` and `dV_0/dt` have opposite signs at every sample.
    pub reversed_everywhere: bool,
    /// Same sign at every sample.
    pub preserved_everywhere: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCheck {
    pub max_relative_error: f64,
    pub rows: Vec<ScalingRow>,
    pub samples: usize,
    pub seed: u64,
}

/// Measures how exactly `(1 − β) dV_β/dt = dV_0/dt` holds on seeded random
/// interior states, and records the sign behaviour for each β.
pub fn scaling_identity_check(
    landscape: &MatrixLandscape<f64>,
    reference: &SimplexPoint<f64>,
    betas: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ScalingCheck> {
    if let Some(&b) = betas.iter().find(|b| (1.0 - **b).abs() < 1e-9) {
        return Err(Error::BetaSingularity { beta: b });
    }
    let points = random_interior_points::<f64>(landscape.dim(), samples, seed);
    let base: Vec<f64> = points
        .iter()
        .map(|x| kl_time_derivative(landscape, reference, x, 0.0))
        .collect::<Result<_>>()?;

    let mut max_relative_error: f64 = 0.0;
    let mut rows = Vec::with_capacity(betas.len());
    for &beta in betas {
        let mut reversed = true;
        let mut preserved = true;
        for (x, &d0) in points.iter().zip(&base) {
            let d = kl_time_derivative(landscape, reference, x, beta)?;
            let err = (d * (1.0 - beta) - d0).abs() / d0.abs().max(1e-300);
            max_relative_error = max_relative_error.max(err);
            reversed &= d * d0 < 0.0;
            preserved &= d * d0 > 0.0;
        }
        rows.push(ScalingRow {
            beta,
            reversed_everywhere: reversed && !points.is_empty(),
            preserved_everywhere: preserved && !points.is_empty(),
        });
    }
    Ok(ScalingCheck {
        max_relative_error,
        rows,
        samples: points.len(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MomentumKind;

    fn hawk_dove() -> MatrixLandscape<f64> {
        MatrixLandscape::cyclic(1.0, 1.0)
    }

    fn polyak(alpha: f64) -> DynamicsConfig<f64> {
        DynamicsConfig::new(DynamicKind::Replicator, MomentumKind::Polyak, alpha, 0.0)
    }

    #[test]
    fn convergence_time_at_reference_is_zero() {
        let b = SimplexPoint::barycenter(3);
        assert_eq!(convergence_time(&polyak(1e-3), &hawk_dove(), &b, &b).unwrap(), 0);
    }

    #[test]
    fn convergence_time_reports_divergence() {
        let m = MatrixLandscape::cyclic(2.0, -1.0);
        let mut cfg = polyak(0.01);
        cfg.momentum_coefficient = 0.9;
        let err = convergence_time(&cfg, &m, &default_x0(), &SimplexPoint::barycenter(3)).unwrap_err();
        assert_eq!(
            err,
            Error::DidNotConverge {
                status: Status::Diverged,
                beta: None
            }
        );
    }

    #[test]
    fn half_momentum_halves_steps() {
        let b = SimplexPoint::barycenter(3);
        let n0 = convergence_time(&polyak(1e-3), &hawk_dove(), &default_x0(), &b).unwrap();
        let n5 = convergence_time(&polyak(1e-3).with_beta(0.5), &hawk_dove(), &default_x0(), &b).unwrap();
        assert!(n0 > 1000);
        let r = n5 as f64 / n0 as f64;
        assert!((r - 0.5).abs() <= 0.05, "ratio {r}");
    }

    #[test]
    fn sweep_single_zero_row() {
        let b = SimplexPoint::barycenter(3);
        let s = beta_sweep_ratio(&polyak(1e-2), &hawk_dove(), &default_x0(), &b, &[0.0]).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.rows[0].ratio, 1.0);
        assert_eq!(s.rows[0].steps, s.base_steps);
        assert_eq!(s.config_digest.len(), 64);
    }

    #[test]
    fn sweep_rejects_beta_one() {
        let b = SimplexPoint::barycenter(3);
        assert!(beta_sweep_ratio(&polyak(1e-2), &hawk_dove(), &default_x0(), &b, &[0.5, 1.0]).is_err());
    }

    #[test]
    fn sweep_annotates_failing_beta() {
        let m = MatrixLandscape::cyclic(2.0, -1.0);
        let b = SimplexPoint::barycenter(3);
        let err = beta_sweep_ratio(&polyak(0.01), &m, &default_x0(), &b, &[0.0, 0.9]).unwrap_err();
        assert!(matches!(err, Error::DidNotConverge { beta: Some(b), .. } if b == 0.9));
    }

    #[test]
    fn digest_tracks_inputs() {
        let b = SimplexPoint::barycenter(3);
        let d1 = config_digest(&polyak(1e-3), &hawk_dove(), &default_x0(), Some(&b), "");
        let d2 = config_digest(&polyak(1e-3), &hawk_dove(), &default_x0(), Some(&b), "");
        let d3 = config_digest(&polyak(2e-3), &hawk_dove(), &default_x0(), Some(&b), "");
        assert_eq!(d1, d2);
        assert_ne!(d1, d3);
    }

    #[test]
    fn momentum_free_run_is_monotone() {
        let m = MatrixLandscape::cyclic(2.0, 1.0);
        let rows = monotonicity_scan(
            &polyak(1.0 / 200.0),
            &m,
            &default_x0(),
            &SimplexPoint::barycenter(3),
            &[0.0],
        )
        .unwrap();
        assert!(rows[0].monotone);
        assert_eq!(rows[0].first_violation_step, None);
        assert_eq!(rows[0].status, Status::Converged);
    }

    #[test]
    fn ols_slope_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.25 * x).collect();
        assert!((ols_slope(&xs, &ys) + 0.25).abs() < 1e-14);
        assert_eq!(ols_slope(&[1.0], &[2.0]), 0.0);
    }

    #[test]
    fn classify_requires_zero_sum() {
        let cfg = polyak(1.0 / 200.0);
        assert!(classify_cycling(&cfg, &hawk_dove(), &default_x0(), 100, 10).is_err());
    }

    #[test]
    fn scaling_check_trivial_and_singular() {
        let m = MatrixLandscape::cyclic(2.0, 1.0);
        let b = SimplexPoint::barycenter(3);
        let c = scaling_identity_check(&m, &b, &[0.0], 20, 1).unwrap();
        assert_eq!(c.max_relative_error, 0.0);
        assert!(c.rows[0].preserved_everywhere);
        assert!(matches!(
            scaling_identity_check(&m, &b, &[1.0], 20, 1),
            Err(Error::BetaSingularity { .. })
        ));
    }
}
