//! Randomized checks of the derivative identity and bounds of the potentials.

use super::ExperimentPlan;
use crate::error::Result;
use crate::forward::boundary_samples;
use crate::heat_kernel::KernelEvaluator;
use crate::potentials::{
    layer_derivative_bound, volume_derivative_bound, volume_potential, volume_potential_dt, LayerDensity,
    PotentialQuadrature, VolumeDensity,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Modes `k = 1..=4` of the layer family `φ_k(y, τ) = cos(kπy₁/L)(τ − s)`.
pub const LAYER_MODES: usize = 4;
const VOLUME_SAMPLES: usize = 10;

/// Fitted layer constant at the base quadrature and two refinements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerFamily {
    pub k: usize,
    pub constants: [f64; 3],
    /// `max/min − 1` over the three constants.
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeSample {
    pub integral_part: f64,
    pub density_norm: f64,
    pub ratio: f64,
}

/// Derivative identity against a centered difference of the potential.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentitySample {
    pub x: Vec<f64>,
    pub t: f64,
    pub analytic: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub layer: Vec<LayerFamily>,
    pub volume: Vec<VolumeSample>,
    pub identity: Vec<IdentitySample>,
    /// Zero densities give zero on both sides of both bounds.
    pub zero_holds: bool,
    /// Worst relative deviation from degree-one homogeneity when the density
    /// is doubled (each side, and the fitted constant).
    pub homogeneity_error: f64,
    pub seed: u64,
}

impl LemmaReport {
    pub fn max_identity_error(&self) -> f64 {
        self.identity.iter().map(|s| s.relative_error).fold(0.0, f64::max)
    }

    pub fn max_layer_spread(&self) -> f64 {
        self.layer.iter().map(|f| f.spread).fold(0.0, f64::max)
    }

    pub fn max_volume_ratio(&self) -> f64 {
        self.volume.iter().map(|v| v.ratio).fold(0.0, f64::max)
    }

    /// Identity within `identity_tol`, layer constants within `spread_tol`,
    /// zero and homogeneity checks exact to rounding.
    pub fn pass(&self, identity_tol: f64, spread_tol: f64) -> bool {
        self.max_identity_error() < identity_tol
            && self.max_layer_spread() < spread_tol
            && self.zero_holds
            && self.homogeneity_error < 1e-9
    }
}

fn layer_family(k: usize, length: f64, s: f64, scale: f64) -> LayerDensity {
    let w = k as f64 * PI / length;
    LayerDensity::new(move |y, tau| scale * (w * y[0]).cos() * (tau - s))
        .with_time_derivative(move |y, _| scale * (w * y[0]).cos())
}

/// `c (1 + dτ) Π_a cos(m_a π y_a / L_a) + e τ y₁²`, with its exact Laplacian.
fn random_density(rng: &mut ChaCha8Rng, lengths: &[f64]) -> VolumeDensity {
    let c = 2.0 * rng.random::<f64>() - 1.0;
    let d = 2.0 * rng.random::<f64>() - 1.0;
    let e = 2.0 * rng.random::<f64>() - 1.0;
    let waves: Vec<f64> = lengths
        .iter()
        .map(|l| rng.random_range(0..4usize) as f64 * PI / l)
        .collect();
    let w2: f64 = waves.iter().map(|w| w * w).sum();
    let modes = waves.clone();
    let product = move |y: &[f64]| modes.iter().zip(y).map(|(w, v)| (w * v).cos()).product::<f64>();
    let p2 = product.clone();
    VolumeDensity::smooth(move |y, tau| c * (1.0 + d * tau) * product(y) + e * tau * y[0] * y[0])
        .with_laplacian(move |y, tau| -w2 * c * (1.0 + d * tau) * p2(y) + 2.0 * e * tau)
}

/// Runs the potential checks for `ev` with densities drawn from `plan.seed`:
/// the layer family `k = 1..=4` at `quad` and two refinements, ten random
/// volume densities for the identity and the integral bound, the zero density
/// and a doubling test.
pub fn lemma_bound_suite(
    ev: &KernelEvaluator,
    plan: &ExperimentPlan,
    quad: &PotentialQuadrature,
) -> Result<LemmaReport> {
    quad.validate()?;
    let domain = *ev.domain();
    let lengths = domain.lengths();
    let horizon = ev.horizon();
    let s = 0.0;
    let targets: Vec<(Vec<f64>, f64)> = boundary_samples(&domain)
        .into_iter()
        .flat_map(|x| (1..=4).map(move |j| (x.clone(), s + 0.25 * j as f64 * horizon)))
        .collect();
    let quads = [quad.clone(), quad.refined(), quad.refined().refined()];

    let mut layer = Vec::with_capacity(LAYER_MODES);
    for k in 1..=LAYER_MODES {
        let phi = layer_family(k, lengths[0], s, 1.0);
        let mut constants = [0.0; 3];
        for (c, q) in constants.iter_mut().zip(&quads) {
            *c = layer_derivative_bound(ev, &phi, &targets, s, q)?.constant;
        }
        let hi = constants.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = constants.iter().copied().fold(f64::INFINITY, f64::min);
        layer.push(LayerFamily {
            k,
            constants,
            spread: if lo > 0.0 { hi / lo - 1.0 } else { f64::INFINITY },
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut volume = Vec::with_capacity(VOLUME_SAMPLES);
    let mut identity = Vec::with_capacity(VOLUME_SAMPLES);
    let eta = 1e-3 * horizon;
    for _ in 0..VOLUME_SAMPLES {
        let phi = random_density(&mut rng, &lengths);
        let x: Vec<f64> = lengths.iter().map(|l| l * (0.05 + 0.9 * rng.random::<f64>())).collect();
        let t = horizon * (0.2 + 0.7 * rng.random::<f64>());
        let b = volume_derivative_bound(ev, &phi, &x, t, s, quad)?;
        volume.push(VolumeSample {
            integral_part: b.integral_part,
            density_norm: b.density_norm,
            ratio: b.ratio,
        });
        let analytic = volume_potential_dt(ev, &phi, &x, t, s, quad)?.total;
        let finite_difference = (volume_potential(ev, &phi, &x, t + eta, s, quad)?
            - volume_potential(ev, &phi, &x, t - eta, s, quad)?)
            / (2.0 * eta);
        identity.push(IdentitySample {
            relative_error: (analytic - finite_difference).abs() / finite_difference.abs().max(1e-12),
            x,
            t,
            analytic,
            finite_difference,
        });
    }

    let zl = layer_derivative_bound(ev, &LayerDensity::zero(), &targets, s, quad)?;
    let x_mid: Vec<f64> = lengths.iter().map(|l| 0.5 * l).collect();
    let zv = volume_derivative_bound(ev, &VolumeDensity::zero(), &x_mid, horizon, s, quad)?;
    let zero_holds =
        zl.sup_potential_dt == 0.0 && zl.sup_density_dt == 0.0 && zv.integral_part == 0.0 && zv.density_norm == 0.0;

    let one = layer_derivative_bound(ev, &layer_family(1, lengths[0], s, 1.0), &targets, s, quad)?;
    let two = layer_derivative_bound(ev, &layer_family(1, lengths[0], s, 2.0), &targets, s, quad)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    let homogeneity_error = rel(two.sup_potential_dt, 2.0 * one.sup_potential_dt)
        .max(rel(two.sup_density_dt, 2.0 * one.sup_density_dt))
        .max(rel(two.constant, one.constant));

    Ok(LemmaReport {
        layer,
        volume,
        identity,
        zero_holds,
        homogeneity_error,
        seed: plan.seed,
    })
}
