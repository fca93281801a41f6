//! Numerical toolkit for recovering a time-dependent coefficient `σ(t)` in
//! `∂_t u − Δu + σ(t) f(x) u = 0` (and its semilinear analogue) from Neumann
//! boundary data, together with the heat-kernel machinery behind the
//! reconstruction formula and an empirical Lipschitz-stability harness.

// `!(a < b)` comparisons are deliberate: they also reject NaN.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::type_complexity
)]

pub mod domain;
pub mod error;
pub mod forward;
pub mod heat_kernel;
pub mod inverse;
pub mod potentials;
pub mod quadrature;
pub mod stability;

mod fd;
mod linalg;
mod spline;

pub use domain::{
    build_grid, sample_function, BoundaryPoint, DomainSpec, GridFunction, GridIndex, GridSpec, SampleTimes,
};
pub use error::{Error, ErrorCategory, Result};

use std::sync::Arc;

/// Scalar field on the closure of the domain.
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Scalar field on the closure of the space-time cylinder.
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// Wrap a closure as a [`SpaceFn`].
pub fn space_fn(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> SpaceFn {
    Arc::new(f)
}

/// Wrap a closure as a [`SpaceTimeFn`].
pub fn space_time_fn(f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> SpaceTimeFn {
    Arc::new(f)
}

/// Format a float with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
