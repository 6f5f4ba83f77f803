//! Replicator and projection vector fields, discrete momentum steppers, the
//! trajectory loop, and the continuous momentum replicator integrator.
//!
//! Every discrete update has the form `z' = βz + F(·)`, `x' = x + αz'` with
//! `z₀ = 0`. Polyak evaluates `F` at `x`; Nesterov evaluates it at the
//! look-ahead point `x + βz`, which may sit outside the simplex.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::lyapunov::{euclidean_half_sq, kl_divergence};
use crate::ode::rk4_step;
use crate::scalar::{dot, Scalar};
use crate::simplex::{mean_fitness_uniform, MatrixLandscape, SimplexPoint, TangentVector};

pub const DEFAULT_CONVERGENCE_EPSILON: f64 = 1e-6;
pub const DEFAULT_BOUNDARY_DELTA: f64 = 1e-9;
pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;
pub const DEFAULT_CONTINUOUS_STEP: f64 = 0.01;

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident => $kw:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name { $($variant),+ }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self { $(Self::$variant => $kw),+ }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($kw => Ok(Self::$variant),)+
                    other => Err(format!(
                        "unknown {} `{other}` (expected one of: {})",
                        stringify!($name),
                        [$($kw),+].join(", ")
                    )),
                }
            }
        }
    };
}

keyword_enum!(
    /// Which geometry the population moves in.
    DynamicKind { Replicator => "replicator", Projection => "projection" }
);

keyword_enum!(MomentumKind { None => "none", Polyak => "polyak", Nesterov => "nesterov" });

keyword_enum!(
    /// How a run ended.
    Status {
        Converged => "converged",
        Diverged => "diverged",
        MaxStepsReached => "maxstepsreached",
    }
);

impl Status {
    /// Capitalized label used in serialized output.
    pub fn label(self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::Diverged => "Diverged",
            Status::MaxStepsReached => "MaxStepsReached",
        }
    }
}

/// Something that maps a state vector to a velocity.
pub trait VectorField<T> {
    fn eval(&self, x: &[T]) -> Result<Vec<T>>;
}

impl<T, F> VectorField<T> for F
where
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        self(x)
    }
}

fn check_mean<T: Scalar>(mean: T) -> Result<()> {
    if mean.abs() <= T::near_zero_mean() {
        Err(Error::NearZeroMeanFitness { mean: mean.as_f64() })
    } else {
        Ok(())
    }
}

/// Replicator velocity `x_i (f_i − x·f)`, divided by `x·f` when `normalize`.
///
/// `x` may be any real vector of the landscape's dimension; Nesterov
/// look-ahead points are evaluated with the same formula.
pub fn replicator_field<T: Scalar>(
    landscape: &MatrixLandscape<T>,
    x: &[T],
    normalize: bool,
) -> Result<TangentVector<T>> {
    let f = landscape.fitness(x)?;
    let mean = dot(x, &f);
    let mut out: Vec<T> = x.iter().zip(&f).map(|(&xi, &fi)| xi * (fi - mean)).collect();
    if normalize {
        check_mean(mean)?;
        out.iter_mut().for_each(|v| *v = *v / mean);
    }
    Ok(TangentVector(out))
}

/// Orthogonal projection velocity `f_i − avg f`, divided by `avg f` when `normalize`.
pub fn projection_field<T: Scalar>(
    landscape: &MatrixLandscape<T>,
    x: &[T],
    normalize: bool,
) -> Result<TangentVector<T>> {
    let f = landscape.fitness(x)?;
    let mean = mean_fitness_uniform(&f);
    let mut out: Vec<T> = f.iter().map(|&fi| fi - mean).collect();
    if normalize {
        check_mean(mean)?;
        out.iter_mut().for_each(|v| *v = *v / mean);
    }
    Ok(TangentVector(out))
}

/// A landscape bound to one dynamic, usable wherever a [`VectorField`] is expected.
#[derive(Debug, Clone, Copy)]
pub struct LandscapeField<'a, T> {
    pub landscape: &'a MatrixLandscape<T>,
    pub dynamic: DynamicKind,
    pub normalize: bool,
}

impl<'a, T: Scalar> LandscapeField<'a, T> {
    pub fn new(landscape: &'a MatrixLandscape<T>, dynamic: DynamicKind, normalize: bool) -> Self {
        Self {
            landscape,
            dynamic,
            normalize,
        }
    }
}

impl<T: Scalar> VectorField<T> for LandscapeField<'_, T> {
    fn eval(&self, x: &[T]) -> Result<Vec<T>> {
        let v = match self.dynamic {
            DynamicKind::Replicator => replicator_field(self.landscape, x, self.normalize)?,
            DynamicKind::Projection => projection_field(self.landscape, x, self.normalize)?,
        };
        Ok(v.into_inner())
    }
}

/// Velocity memory carried between momentum steps.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumState<T> {
    z: Vec<T>,
}

impl<T: Scalar> MomentumState<T> {
    pub fn zeros(n: usize) -> Self {
        Self { z: vec![T::zero(); n] }
    }

    pub fn from_vec(z: Vec<T>) -> Self {
        Self { z }
    }

    pub fn components(&self) -> &[T] {
        &self.z
    }

    pub fn sum(&self) -> T {
        self.z.iter().copied().sum()
    }
}

/// Plain gradient step `x + α F(x)`; no simplex validation.
pub fn euclidean_gd_step<T: Scalar>(field: &impl VectorField<T>, x: &[T], alpha: T) -> Result<Vec<T>> {
    let v = field.eval(x)?;
    Ok(x.iter().zip(&v).map(|(&xi, &vi)| xi + alpha * vi).collect())
}

fn advance<T: Scalar>(x: &[T], z: &[T], force: &[T], alpha: T, beta: T) -> (Vec<T>, Vec<T>) {
    let z_next: Vec<T> = z.iter().zip(force).map(|(&zi, &fi)| beta * zi + fi).collect();
    let x_next = x.iter().zip(&z_next).map(|(&xi, &zi)| xi + alpha * zi).collect();
    (x_next, z_next)
}

fn raw_polyak<T: Scalar>(field: &impl VectorField<T>, x: &[T], z: &[T], alpha: T, beta: T) -> Result<(Vec<T>, Vec<T>)> {
    let force = field.eval(x)?;
    Ok(advance(x, z, &force, alpha, beta))
}

fn raw_nesterov<T: Scalar>(
    field: &impl VectorField<T>,
    x: &[T],
    z: &[T],
    alpha: T,
    beta: T,
) -> Result<(Vec<T>, Vec<T>)> {
    let look_ahead: Vec<T> = x.iter().zip(z).map(|(&xi, &zi)| xi + beta * zi).collect();
    let force = field.eval(&look_ahead)?;
    Ok(advance(x, z, &force, alpha, beta))
}

fn into_simplex<T: Scalar>(raw: Vec<T>) -> Result<SimplexPoint<T>> {
    if let Some((index, &v)) = raw.iter().enumerate().find(|(_, v)| **v < T::zero()) {
        return Err(Error::StateLeftSimplex {
            index,
            value: v.as_f64(),
        });
    }
    SimplexPoint::new(raw)
}

/// Polyak momentum: `z' = βz + F(x)`, `x' = x + αz'`.
pub fn polyak_step<T: Scalar>(
    field: &impl VectorField<T>,
    x: &SimplexPoint<T>,
    z: &MomentumState<T>,
    alpha: T,
    beta: T,
) -> Result<(SimplexPoint<T>, MomentumState<T>)> {
    let (x_next, z_next) = raw_polyak(field, x.coords(), &z.z, alpha, beta)?;
    Ok((into_simplex(x_next)?, MomentumState { z: z_next }))
}

/// Nesterov momentum: `z' = βz + F(x + βz)`, `x' = x + αz'`.
pub fn nesterov_step<T: Scalar>(
    field: &impl VectorField<T>,
    x: &SimplexPoint<T>,
    z: &MomentumState<T>,
    alpha: T,
    beta: T,
) -> Result<(SimplexPoint<T>, MomentumState<T>)> {
    let (x_next, z_next) = raw_nesterov(field, x.coords(), &z.z, alpha, beta)?;
    Ok((into_simplex(x_next)?, MomentumState { z: z_next }))
}

/// Parameters of a discrete run.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsConfig<T> {
    pub dynamic: DynamicKind,
    pub momentum: MomentumKind,
    pub learning_rate: T,
    pub momentum_coefficient: T,
    pub normalize_by_mean: bool,
    pub max_steps: u64,
    pub convergence_epsilon: T,
    pub boundary_delta: T,
    /// Keep every k-th state (plus the first and last). Does not affect the dynamics.
    pub record_every: u64,
}

impl<T: Scalar> DynamicsConfig<T> {
    pub fn new(dynamic: DynamicKind, momentum: MomentumKind, learning_rate: T, momentum_coefficient: T) -> Self {
        Self {
            dynamic,
            momentum,
            learning_rate,
            momentum_coefficient,
            normalize_by_mean: false,
            max_steps: DEFAULT_MAX_STEPS,
            convergence_epsilon: T::lit(DEFAULT_CONVERGENCE_EPSILON),
            boundary_delta: T::lit(DEFAULT_BOUNDARY_DELTA),
            record_every: 1,
        }
    }

    pub fn with_beta(&self, beta: T) -> Self {
        Self {
            momentum_coefficient: beta,
            ..self.clone()
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |field: &'static str, reason: String| Err(Error::InvalidConfig { field, reason });
        if !(self.learning_rate > T::zero()) || !self.learning_rate.is_finite() {
            return bad("alpha", format!("must be positive, got {}", self.learning_rate));
        }
        if !self.momentum_coefficient.is_finite() {
            return bad("beta", format!("must be finite, got {}", self.momentum_coefficient));
        }
        if self.max_steps < 1 {
            return bad("max_steps", "must be at least 1".into());
        }
        if !(self.convergence_epsilon > T::zero()) {
            return bad("epsilon", format!("must be positive, got {}", self.convergence_epsilon));
        }
        let upper = T::one() / T::lit(n as f64);
        if !(self.boundary_delta > T::zero() && self.boundary_delta < upper) {
            return bad(
                "boundary_delta",
                format!("must lie in (0, 1/{n}), got {}", self.boundary_delta),
            );
        }
        if self.record_every < 1 {
            return bad("record_every", "must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub step: u64,
    pub time: T,
    pub state: SimplexPoint<T>,
    pub kl: Option<T>,
    pub euclidean: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub records: Vec<StepRecord<T>>,
    pub status: Status,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&StepRecord<T>> {
        self.records.last()
    }

    pub fn dim(&self) -> Option<usize> {
        self.records.first().map(|r| r.state.dim())
    }

    pub fn kl_series(&self) -> Vec<T> {
        self.records.iter().filter_map(|r| r.kl).collect()
    }

    pub fn euclidean_series(&self) -> Vec<T> {
        self.records.iter().filter_map(|r| r.euclidean).collect()
    }

    /// Fills in both Lyapunov columns against `reference`.
    pub fn annotate(&mut self, reference: &SimplexPoint<T>) -> Result<()> {
        for r in &mut self.records {
            let (kl, eu) = lyapunov_pair(reference, &r.state)?;
            r.kl = Some(kl);
            r.euclidean = Some(eu);
        }
        Ok(())
    }
}

// KL is +inf once the state has lost a type the reference still holds.
fn lyapunov_pair<T: Scalar>(reference: &SimplexPoint<T>, x: &SimplexPoint<T>) -> Result<(T, T)> {
    let kl = match kl_divergence(reference, x) {
        Ok(v) => v,
        Err(Error::SupportViolation { .. }) => T::infinity(),
        Err(e) => return Err(e),
    };
    Ok((kl, euclidean_half_sq(reference, x)?))
}

/// Where the segment from interior `x` to `raw_next` first crosses the boundary.
fn boundary_exit<T: Scalar>(x: &[T], raw_next: &[T]) -> Result<SimplexPoint<T>> {
    let (hit, t) = x
        .iter()
        .zip(raw_next)
        .enumerate()
        .filter(|(_, (_, &b))| b < T::zero())
        .map(|(i, (&a, &b))| (i, a / (a - b)))
        .fold(
            (usize::MAX, T::infinity()),
            |acc, cur| if cur.1 < acc.1 { cur } else { acc },
        );
    let coords = x
        .iter()
        .zip(raw_next)
        .enumerate()
        .map(|(i, (&a, &b))| {
            if i == hit {
                T::zero()
            } else {
                (a + t * (b - a)).max(T::zero())
            }
        })
        .collect();
    SimplexPoint::new(coords)
}

/// Runs the configured discrete dynamic from `x0` with `z₀ = 0`.
///
/// With a reference, the run stops as `Converged` once the dynamic's own
/// Lyapunov function (KL for replicator, half squared distance for
/// projection) drops below `convergence_epsilon`. It stops as `Diverged`
/// when a coordinate reaches `boundary_delta` or a step would leave the
/// simplex; in the latter case the final record is the boundary crossing
/// point of that step.
pub fn iterate<T: Scalar>(
    config: &DynamicsConfig<T>,
    landscape: &MatrixLandscape<T>,
    x0: &SimplexPoint<T>,
    reference: Option<&SimplexPoint<T>>,
) -> Result<Trajectory<T>> {
    let n = landscape.dim();
    config.validate(n)?;
    for p in std::iter::once(x0).chain(reference) {
        if p.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.dim(),
            });
        }
    }
    if !x0.is_interior(config.boundary_delta) {
        return Err(Error::InvalidConfig {
            field: "x0",
            reason: format!(
                "every coordinate must exceed boundary_delta = {}",
                config.boundary_delta
            ),
        });
    }

    let field = LandscapeField::new(landscape, config.dynamic, config.normalize_by_mean);
    let alpha = config.learning_rate;
    let beta = config.momentum_coefficient;
    let record = |step: u64, state: SimplexPoint<T>| -> Result<StepRecord<T>> {
        let (kl, euclidean) = match reference {
            Some(r) => {
                let (k, e) = lyapunov_pair(r, &state)?;
                (Some(k), Some(e))
            }
            None => (None, None),
        };
        Ok(StepRecord {
            step,
            time: T::lit(step as f64) * alpha,
            state,
            kl,
            euclidean,
        })
    };

    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut z = vec![T::zero(); n];
    let mut step = 0u64;
    let status = loop {
        let rec = record(step, x.clone())?;
        let selected = match config.dynamic {
            DynamicKind::Replicator => rec.kl,
            DynamicKind::Projection => rec.euclidean,
        };
        let outcome = if selected.is_some_and(|v| v < config.convergence_epsilon) {
            Some(Status::Converged)
        } else if !x.is_interior(config.boundary_delta) {
            Some(Status::Diverged)
        } else if step >= config.max_steps {
            Some(Status::MaxStepsReached)
        } else {
            None
        };
        if outcome.is_some() || step.is_multiple_of(config.record_every) {
            records.push(rec);
        }
        if let Some(s) = outcome {
            break s;
        }

        let (raw_x, z_next) = match config.momentum {
            MomentumKind::None => raw_polyak(&field, x.coords(), &z, alpha, T::zero())?,
            MomentumKind::Polyak => raw_polyak(&field, x.coords(), &z, alpha, beta)?,
            MomentumKind::Nesterov => raw_nesterov(&field, x.coords(), &z, alpha, beta)?,
        };
        step += 1;
        match into_simplex(raw_x.clone()) {
            Ok(next) => {
                x = next;
                z = z_next;
            }
            Err(Error::StateLeftSimplex { .. }) => {
                records.push(record(step, boundary_exit(x.coords(), &raw_x)?)?);
                break Status::Diverged;
            }
            Err(e) => return Err(e),
        }
    };
    Ok(Trajectory { records, status })
}

/// Integrates `dx_i/dt = x_i (f_i − x·f) / (1 − β)` with fixed-step RK4 from
/// time 0 to `horizon`, renormalizing the coordinate sum after each step.
///
/// The status is `Diverged` if a coordinate reaches the default boundary
/// threshold, otherwise `MaxStepsReached` once the horizon is reached. No
/// Lyapunov values are attached; see [`Trajectory::annotate`].
pub fn continuous_integrate<T: Scalar>(
    landscape: &MatrixLandscape<T>,
    x0: &SimplexPoint<T>,
    beta: T,
    horizon: T,
    h: T,
) -> Result<Trajectory<T>> {
    let n = landscape.dim();
    if x0.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x0.dim(),
        });
    }
    if (T::one() - beta).abs() < T::lit(1e-9) {
        return Err(Error::BetaSingularity { beta: beta.as_f64() });
    }
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidConfig {
            field: "step",
            reason: format!("must be positive, got {h}"),
        });
    }
    if !(h <= horizon) || !horizon.is_finite() {
        return Err(Error::InvalidConfig {
            field: "horizon",
            reason: format!("must be finite and at least the step {h}, got {horizon}"),
        });
    }

    let scale = T::one() / (T::one() - beta);
    let rhs = |x: &[T]| -> Result<Vec<T>> {
        Ok(replicator_field(landscape, x, false)?
            .into_inner()
            .into_iter()
            .map(|v| v * scale)
            .collect())
    };

    let ratio = (horizon / h).as_f64();
    let steps = if (ratio - ratio.round()).abs() < 1e-9 {
        ratio.round() as u64
    } else {
        ratio.ceil() as u64
    };
    let delta = T::lit(DEFAULT_BOUNDARY_DELTA);
    let blank = |step: u64, time: T, state: SimplexPoint<T>| StepRecord {
        step,
        time,
        state,
        kl: None,
        euclidean: None,
    };

    let mut records = vec![blank(0, T::zero(), x0.clone())];
    let mut x = x0.clone();
    let mut status = Status::MaxStepsReached;
    for k in 1..=steps {
        if !x.is_interior(delta) {
            status = Status::Diverged;
            break;
        }
        let t_prev = T::lit((k - 1) as f64) * h;
        let time = if k == steps { horizon } else { T::lit(k as f64) * h };
        let raw = rk4_step(rhs, x.coords(), time - t_prev)?;
        match into_simplex(raw.clone()) {
            Ok(next) => {
                x = next;
                records.push(blank(k, time, x.clone()));
            }
            Err(Error::StateLeftSimplex { .. }) => {
                records.push(blank(k, time, boundary_exit(x.coords(), &raw)?));
                status = Status::Diverged;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if status == Status::MaxStepsReached && !x.is_interior(delta) {
        status = Status::Diverged;
    }
    Ok(Trajectory { records, status })
}
