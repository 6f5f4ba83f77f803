//! Evolutionary dynamics on the probability simplex with momentum.
//!
//! The replicator and orthogonal-projection dynamics are driven by a linear
//! fitness landscape `f(x) = A x` and stepped with optional Polyak or
//! Nesterov momentum. KL divergence and half squared Euclidean distance to
//! an evolutionarily stable state serve as Lyapunov functions, and the
//! [`experiments`] module packages the convergence, monotonicity and cycling
//! measurements built on top of them.
//!
//! The simplex, dynamics and Lyapunov code is generic over [`Scalar`]
//! (`f32` or `f64`); the aliases below fix the precision.

// `!(x > 0)` is used on purpose so NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod lyapunov;
pub mod ode;
pub mod sampling;
pub mod scalar;
pub mod simplex;

pub use dynamics::{
    continuous_integrate, euclidean_gd_step, iterate, nesterov_step, polyak_step, projection_field, replicator_field,
    DynamicKind, DynamicsConfig, LandscapeField, MomentumKind, MomentumState, Status, StepRecord, Trajectory,
    VectorField,
};
pub use error::{Error, Result};
pub use lyapunov::{
    discrete_lyapunov_quotient, euclidean_half_sq, jensen_bound, kl_divergence, kl_time_derivative, verify_ess,
    EssReport,
};
pub use scalar::Scalar;
pub use simplex::{mean_fitness_uniform, mean_fitness_weighted, MatrixLandscape, SimplexPoint, TangentVector};

pub type Point64 = SimplexPoint<f64>;
pub type Landscape64 = MatrixLandscape<f64>;
pub type Tangent64 = TangentVector<f64>;
pub type Momentum64 = MomentumState<f64>;
pub type Config64 = DynamicsConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type EssReport64 = EssReport<f64>;

pub type Point32 = SimplexPoint<f32>;
pub type Landscape32 = MatrixLandscape<f32>;
pub type Tangent32 = TangentVector<f32>;
pub type Momentum32 = MomentumState<f32>;
pub type Config32 = DynamicsConfig<f32>;
pub type Trajectory32 = Trajectory<f32>;
pub type EssReport32 = EssReport<f32>;
