//! Random coefficients `σ(t) = a₀ + Σ_{k≤3} a_k sin(kπt/T)`.

use crate::error::{Error, Result};
use rand::{Rng, RngExt};
use std::f64::consts::PI;

const MODES: usize = 3;
/// Samples used for the `C¹` norm.
const NORM_SAMPLES: usize = 400;
const MAX_DRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigPath {
    pub offset: f64,
    pub coeffs: [f64; MODES],
    pub period: f64,
}

impl TrigPath {
    pub fn eval(&self, t: f64) -> f64 {
        self.offset
            + self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| a * ((k + 1) as f64 * PI * t / self.period).sin())
                .sum::<f64>()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let w = (k + 1) as f64 * PI / self.period;
                a * w * (w * t).cos()
            })
            .sum()
    }

    /// `max(sup |σ|, sup |σ'|)` on `[0, T]`, sampled.
    pub fn c1_norm(&self) -> f64 {
        let (mut v, mut d) = (0.0f64, 0.0f64);
        for i in 0..=NORM_SAMPLES {
            let t = self.period * i as f64 / NORM_SAMPLES as f64;
            v = v.max(self.eval(t).abs());
            d = d.max(self.derivative(t).abs());
        }
        v.max(d)
    }

    fn scaled(&self, c: f64) -> TrigPath {
        TrigPath {
            offset: c * self.offset,
            coeffs: self.coeffs.map(|a| c * a),
            period: self.period,
        }
    }

    /// `self + c·other`; both must share the period.
    pub fn plus(&self, c: f64, other: &TrigPath) -> TrigPath {
        let mut out = *self;
        out.offset += c * other.offset;
        for (a, b) in out.coeffs.iter_mut().zip(other.coeffs) {
            *a += c * b;
        }
        out
    }
}

fn draw_coeffs(rng: &mut impl Rng, scale: f64, period: f64) -> [f64; MODES] {
    std::array::from_fn(|k| {
        let w = (k + 1) as f64 * PI / period;
        scale * (2.0 * rng.random::<f64>() - 1.0) / (1.0 + w)
    })
}

/// A member of the family with `σ(0) = offset` in the `C¹` ball of `radius`,
/// by rejection.
pub fn sample_in_ball(rng: &mut impl Rng, offset: f64, radius: f64, period: f64) -> Result<TrigPath> {
    if !(offset.abs() <= radius) {
        return Err(Error::InvalidInput(format!(
            "σ(0) = {offset} lies outside the ball of radius {radius}"
        )));
    }
    for _ in 0..MAX_DRAWS {
        let p = TrigPath {
            offset,
            coeffs: draw_coeffs(rng, radius, period),
            period,
        };
        if p.c1_norm() <= radius {
            return Ok(p);
        }
    }
    Err(Error::InvalidInput(format!(
        "no coefficient with σ(0) = {offset} accepted into the ball of radius {radius} after {MAX_DRAWS} draws"
    )))
}

/// A perturbation vanishing at `t = 0` with unit `C¹` norm.
pub fn sample_direction(rng: &mut impl Rng, period: f64) -> TrigPath {
    loop {
        let p = TrigPath {
            offset: 0.0,
            coeffs: draw_coeffs(rng, 1.0, period),
            period,
        };
        let n = p.c1_norm();
        if n > 1e-3 {
            return p.scaled(1.0 / n);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_respect_ball_and_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = sample_in_ball(&mut rng, 0.2, 0.9, 1.0).unwrap();
            assert!(p.c1_norm() <= 0.9);
            assert_eq!(p.eval(0.0), 0.2);
        }
    }

    #[test]
    fn directions_have_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = sample_direction(&mut rng, 2.0);
        assert!((d.c1_norm() - 1.0).abs() < 1e-12);
        assert_eq!(d.eval(0.0), 0.0);
    }

    #[test]
    fn derivative_matches_differences() {
        let p = TrigPath {
            offset: 0.1,
            coeffs: [0.3, -0.2, 0.05],
            period: 1.5,
        };
        let h = 1e-6;
        let fd = (p.eval(0.4 + h) - p.eval(0.4 - h)) / (2.0 * h);
        assert!((fd - p.derivative(0.4)).abs() < 1e-8);
    }

    #[test]
    fn offset_outside_ball_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_in_ball(&mut rng, 1.5, 1.0, 1.0).is_err());
    }
}
