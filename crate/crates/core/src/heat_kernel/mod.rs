//! Neumann fundamental solution of `∂_t − Δ − q` on model geometries: Gaussian
//! kernel, reflection images, the Levi correction and checks on the result.
//!
//! Sign convention: the operator is `∂_t − Δ − q`, so for constant `q`
//! the kernel is `U = e^{q(t−s)} H`. The linear inverse problem uses
//! `q = −σ₂(t) f(x)`.

mod checks;
mod coefficient;
mod evaluator;
mod table;

pub use checks::{
    chapman_kolmogorov_error, delta_property_error, normalization_error, pde_residual, symmetry_error,
    verify_mass_bound, MassReport, MassSample, ResidualReport,
};
pub use coefficient::ZeroOrderCoefficient;
pub use evaluator::{build_fundamental_solution, BuildDiagnostics, KernelEvaluator, LeviValue};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::quadrature::Nodes1d;
use std::f64::consts::PI;

/// Truncation and resolution parameters of the kernel construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametrixConfig {
    /// Maximum number of Levi correction terms.
    pub levi_terms: usize,
    /// Reflection images per side on each axis.
    pub image_terms: usize,
    /// Lattice points per axis on which the correction is tabulated.
    pub quad_nodes_space: usize,
    /// Elapsed-time intervals of the correction lattice.
    pub quad_nodes_time: usize,
    /// Target size of the neglected series tail.
    pub series_tol: f64,
    /// Largest elapsed time `t − s` (and source time `s`) the table covers.
    pub time_horizon: f64,
    /// Normalized PDE residual the built kernel should meet; construction
    /// fails above ten times this value.
    pub residual_tol: f64,
}

impl Default for ParametrixConfig {
    fn default() -> Self {
        ParametrixConfig {
            levi_terms: 20,
            image_terms: 6,
            quad_nodes_space: 33,
            quad_nodes_time: 32,
            series_tol: 1e-8,
            time_horizon: 1.0,
            residual_tol: 1e-3,
        }
    }
}

impl ParametrixConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.image_terms < 1 {
            return bad("image_terms must be at least 1".into());
        }
        if self.quad_nodes_space < 4 {
            return bad(format!(
                "quad_nodes_space must be at least 4, got {}",
                self.quad_nodes_space
            ));
        }
        if self.quad_nodes_time < 2 {
            return bad(format!(
                "quad_nodes_time must be at least 2, got {}",
                self.quad_nodes_time
            ));
        }
        if !(self.series_tol > 0.0) {
            return bad("series_tol must be positive".into());
        }
        if !(self.time_horizon > 0.0 && self.time_horizon.is_finite()) {
            return bad("time_horizon must be positive".into());
        }
        if !(self.residual_tol > 0.0) {
            return bad("residual_tol must be positive".into());
        }
        Ok(())
    }
}

fn check_elapsed(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("elapsed time must be positive, got {t}")))
    }
}

/// Heat kernel `G(x, t) = (4πt)^{−n/2} exp(−|x|²/(4t))` with `n = x.len()`.
pub fn gaussian_kernel(x: &[f64], t: f64) -> Result<f64> {
    check_elapsed(t)?;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Ok((4.0 * PI * t).powf(-(x.len() as f64) / 2.0) * (-r2 / (4.0 * t)).exp())
}

/// Half-space kernel `G(x − y, t) + G(x − ȳ, t)` with `ȳ` the mirror image
/// of `y` across `{x₁ = 0}`.
pub fn half_space_kernel(x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    check_elapsed(t)?;
    let (d, dbar) = half_space_offsets(x, y);
    Ok(gaussian_kernel(&d, t)? + gaussian_kernel(&dbar, t)?)
}

/// Gradient in `x` of [`half_space_kernel`].
pub fn half_space_kernel_gradient(x: &[f64], y: &[f64], t: f64) -> Result<Vec<f64>> {
    check_elapsed(t)?;
    let (d, dbar) = half_space_offsets(x, y);
    let g = gaussian_kernel(&d, t)?;
    let gbar = gaussian_kernel(&dbar, t)?;
    Ok(d.iter()
        .zip(&dbar)
        .map(|(a, b)| -(a * g + b * gbar) / (2.0 * t))
        .collect())
}

fn half_space_offsets(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut dbar = d.clone();
    dbar[0] = x[0] + y[0];
    (d, dbar)
}

/// Neumann heat kernel of `[0, L]` from `images` reflection pairs per side.
/// Only images within reach of the Gaussian's support are evaluated.
#[inline]
pub(crate) fn reflected_1d(x: f64, y: f64, t: f64, l: f64, images: usize) -> f64 {
    let m = images as f64;
    let reach = (4.0 * t * 40.0).sqrt();
    let norm = 1.0 / (4.0 * PI * t).sqrt();
    let mut acc = 0.0;
    for d in [x - y, x + y] {
        let lo = ((d - reach) / (2.0 * l)).ceil().max(-m);
        let hi = ((d + reach) / (2.0 * l)).floor().min(m);
        let mut k = lo;
        while k <= hi {
            let r = d - 2.0 * k * l;
            acc += (-r * r / (4.0 * t)).exp();
            k += 1.0;
        }
    }
    acc * norm
}

/// Reflected Gaussian on the interval, or its tensor product on the rectangle.
pub fn reflected_kernel(domain: &DomainSpec, x: &[f64], y: &[f64], t: f64, config: &ParametrixConfig) -> Result<f64> {
    check_elapsed(t)?;
    let lengths = domain.lengths();
    if x.len() != lengths.len() || y.len() != lengths.len() {
        return Err(Error::InvalidInput(format!(
            "points must have dimension {}",
            lengths.len()
        )));
    }
    Ok(lengths
        .iter()
        .enumerate()
        .map(|(a, &l)| reflected_1d(x[a], y[a], t, l, config.image_terms))
        .product())
}

/// Parametrix `H(x, t; y)`. On the model geometries a single chart covers the
/// domain, so this is the reflected kernel.
pub fn parametrix_h(domain: &DomainSpec, x: &[f64], y: &[f64], t: f64, config: &ParametrixConfig) -> Result<f64> {
    reflected_kernel(domain, x, y, t, config)
}

/// Defect `J₀ = (∂_t − Δ_x − q(x, t)) H(x, t − s; y)`. The reflected kernel
/// solves the heat equation exactly, leaving `−q(x, t) H`.
#[allow(clippy::too_many_arguments)]
pub fn levi_j0(
    domain: &DomainSpec,
    x: &[f64],
    t: f64,
    y: &[f64],
    s: f64,
    q: &ZeroOrderCoefficient,
    config: &ParametrixConfig,
) -> Result<f64> {
    if s >= t {
        return Err(Error::Domain(format!("need s < t, got s = {s}, t = {t}")));
    }
    if q.is_zero() {
        return Ok(0.0);
    }
    Ok(-q.eval(x, t) * parametrix_h(domain, x, y, t - s, config)?)
}

/// First iterated defect `J₁ = ∫_s^t ∫_Ω J₀(x, t; z, τ) J₀(z, τ; y, s) dz dτ`
/// by direct quadrature on the interval (`t − τ = u²` and `τ − s = v²`
/// substitutions remove both endpoint singularities).
#[allow(clippy::too_many_arguments)]
pub fn levi_j1(
    length: f64,
    x: f64,
    t: f64,
    y: f64,
    s: f64,
    q: &ZeroOrderCoefficient,
    config: &ParametrixConfig,
    time_nodes: usize,
) -> Result<f64> {
    if s >= t {
        return Err(Error::Domain(format!("need s < t, got s = {s}, t = {t}")));
    }
    let e = t - s;
    let m = config.image_terms;
    let inner = |tau: f64| {
        let (a, b) = (t - tau, tau - s);
        // The factor with the shorter elapsed time is the sharp one.
        let (center, sharp, smooth) = if a <= b { (x, a, b) } else { (y, b, a) };
        let rule = Nodes1d::two_scale(
            0.0,
            length,
            center,
            (2.0 * sharp).sqrt(),
            (2.0 * smooth).sqrt().min(length / 8.0),
            12.0,
            8,
        );
        rule.sum(|z| {
            q.eval(&[x], t) * reflected_1d(x, z, a, length, m) * q.eval(&[z], tau) * reflected_1d(z, y, b, length, m)
        })
    };
    // Split at the midpoint; each half carries one endpoint singularity.
    let half = 0.5 * e;
    let upper = crate::quadrature::integrate(0.0, half.sqrt(), time_nodes, |u| 2.0 * u * inner(t - u * u));
    let lower = crate::quadrature::integrate(0.0, half.sqrt(), time_nodes, |v| 2.0 * v * inner(s + v * v));
    Ok(upper + lower)
}
