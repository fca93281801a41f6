//! Noise injection and the Gronwall-type a-posteriori certificate.

use super::MeasuredData;
use crate::error::{Error, Result};
use crate::forward::CoefficientPath;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Adds uniform noise in `[−ε, ε]` to `∂_t ∂_ν u` at every boundary sample.
/// `∂_ν u` is shifted by the running sum `Δt Σ_{j≤k} ε_j`, so its backward
/// quotient carries exactly the same perturbation.
pub fn add_noise(measured: &MeasuredData, epsilon: f64, seed: u64) -> Result<MeasuredData> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise level must be non-negative, got {epsilon}"
        )));
    }
    let mut out = measured.clone();
    let rec = &mut out.record;
    let nb = rec.n_points();
    let nt = rec.n_times();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drift = vec![0.0; nb];
    for k in 0..nt {
        let dt = if k > 0 { rec.times[k] - rec.times[k - 1] } else { 0.0 };
        for b in 0..nb {
            let e = epsilon * (2.0 * rng.random::<f64>() - 1.0);
            rec.dt_dnu[k * nb + b] += e;
            drift[b] += dt * e;
            rec.dnu[k * nb + b] += drift[b];
        }
    }
    out.noise_level = measured.noise_level + epsilon;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GronwallReport {
    /// Whether `|σ(t_n)| ≤ C·gap·e^{C t_n}` at every sample for the given `C`.
    pub holds: bool,
    pub violations: usize,
    /// Smallest `C` for which the inequality holds at every sample.
    pub c_fit: f64,
    /// `σ ≡ 0`: every `C > 0` works and `c_fit = 0`.
    pub degenerate: bool,
}

/// Smallest `C ≥ 0` with `C e^{C t} ≥ r`, by bisection.
fn minimal_constant(r: f64, t: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let phi = |c: f64| c * (c * t).exp();
    let mut hi = r.max(1.0);
    while phi(hi) < r {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) >= r {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

/// Checks `|σ(t_n)| ≤ C·data_gap·e^{C t_n}` on the samples of `sigma` and fits
/// the smallest admissible constant.
pub fn gronwall_certificate(sigma: &CoefficientPath, data_gap: f64, c: f64) -> Result<GronwallReport> {
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("constant must be positive, got {c}")));
    }
    if !(data_gap >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "data gap must be non-negative, got {data_gap}"
        )));
    }
    let degenerate = sigma.values().iter().all(|&s| s == 0.0);
    let mut violations = 0;
    let mut c_fit = 0.0f64;
    for (&t, &s) in sigma.times().iter().zip(sigma.values()) {
        if s.abs() > c * data_gap * (c * t).exp() {
            violations += 1;
        }
        let needed = if s == 0.0 {
            0.0
        } else if data_gap == 0.0 {
            f64::INFINITY
        } else {
            minimal_constant(s.abs() / data_gap, t)
        };
        c_fit = c_fit.max(needed);
    }
    Ok(GronwallReport {
        holds: violations == 0,
        violations,
        c_fit,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times(n: usize) -> Vec<f64> {
        (0..=n).map(|k| k as f64 / n as f64).collect()
    }

    #[test]
    fn zero_path_is_degenerate() {
        let p = CoefficientPath::constant(&times(10), 0.0).unwrap();
        let r = gronwall_certificate(&p, 1e-3, 0.5).unwrap();
        assert!(r.holds && r.degenerate);
        assert_eq!(r.c_fit, 0.0);
    }

    #[test]
    fn exponential_path_fits_unit_constant() {
        let eps = 1e-3;
        let p = CoefficientPath::from_fn(&times(20), |t| eps * t.exp()).unwrap();
        let r = gronwall_certificate(&p, eps, 2.0).unwrap();
        assert!(r.holds);
        assert!((r.c_fit - 1.0).abs() < 1e-12);
        let r = gronwall_certificate(&p, eps, 0.9).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn constant_path_needs_unit_constant_at_start() {
        let p = CoefficientPath::constant(&times(10), 0.2).unwrap();
        let r = gronwall_certificate(&p, 0.2, 1.0).unwrap();
        assert!((r.c_fit - 1.0).abs() < 1e-12);
    }
}
