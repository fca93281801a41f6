//! Validators for the compatibility, non-degeneracy and growth hypotheses.

use super::{NonlinearRHS, ProblemData};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};

/// Points on `Γ` at which boundary conditions are checked: the endpoints of
/// the interval, or 17 points per edge of the rectangle.
pub fn boundary_samples(domain: &DomainSpec) -> Vec<Vec<f64>> {
    match *domain {
        DomainSpec::Interval { length } => vec![vec![0.0], vec![length]],
        DomainSpec::Rectangle { lx, ly } => {
            let mut out = Vec::new();
            for k in 0..=16 {
                let f = k as f64 / 16.0;
                out.push(vec![f * lx, 0.0]);
                out.push(vec![f * lx, ly]);
                if k > 0 && k < 16 {
                    out.push(vec![0.0, f * ly]);
                    out.push(vec![lx, f * ly]);
                }
            }
            out
        }
    }
}

fn time_samples(final_time: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| final_time * k as f64 / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearHypotheses {
    /// `max_Γ |∂_t g(x, 0) − Δh(x) + σ(0) f(x) h(x)|`.
    pub compatibility_residual: f64,
    pub compatibility_tol: f64,
    /// `inf_t |g(x₀, t) f(x₀)|` over 401 samples of `[0, T]`.
    pub h2_infimum: f64,
    pub x0: Vec<f64>,
}

impl LinearHypotheses {
    pub fn h1_holds(&self) -> bool {
        self.compatibility_residual < self.compatibility_tol
    }

    pub fn h2_holds(&self) -> bool {
        self.h2_infimum > 0.0
    }

    pub fn pass(&self) -> bool {
        self.h1_holds() && self.h2_holds()
    }

    /// The first failed hypothesis as an error.
    pub fn check(&self) -> Result<()> {
        if !self.h1_holds() {
            return Err(Error::Hypothesis {
                hypothesis: "H1",
                detail: format!(
                    "compatibility residual {:.3e} exceeds {:.1e}",
                    self.compatibility_residual, self.compatibility_tol
                ),
            });
        }
        if !self.h2_holds() {
            return Err(Error::Hypothesis {
                hypothesis: "H2",
                detail: format!("inf_t |g(x0, t) f(x0)| = 0 at x0 = {:?}", self.x0),
            });
        }
        Ok(())
    }
}

pub fn validate_h1_h2(data: &ProblemData, sigma0: f64, x0: &[f64], compatibility_tol: f64) -> LinearHypotheses {
    let compatibility_residual = boundary_samples(&data.domain)
        .iter()
        .map(|x| (data.g_dt(x, 0.0) - data.h_laplacian(x) + sigma0 * (data.f)(x) * (data.h)(x)).abs())
        .fold(0.0, f64::max);
    let f0 = (data.f)(x0);
    let h2_infimum = time_samples(data.final_time, 400)
        .map(|t| ((data.g)(x0, t) * f0).abs())
        .fold(f64::INFINITY, f64::min);
    LinearHypotheses {
        compatibility_residual,
        compatibility_tol,
        h2_infimum,
        x0: x0.to_vec(),
    }
}

/// A sample where `u F(x, t, σ, u) > c u² + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthViolation {
    pub x: Vec<f64>,
    pub t: f64,
    pub sigma: f64,
    pub u: f64,
    /// `u F − (c u² + d)`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemilinearHypotheses {
    /// `max_Γ |∂_t g(x, 0) − Δh(x) − F(x, 0, σ(0), h(x))|`.
    pub compatibility_residual: f64,
    pub compatibility_tol: f64,
    /// `inf |∂_σ F(x₀, t, σ, g(x₀, t))|` over a 41 × 41 lattice of
    /// `[0, T] × [−M, M]`.
    pub h5_infimum: f64,
    /// False when no growth constants were supplied.
    pub h6_checked: bool,
    pub h6_samples: usize,
    /// Worst violations first, at most 10.
    pub h6_violations: Vec<GrowthViolation>,
    pub h6_violation_count: usize,
    pub x0: Vec<f64>,
}

impl SemilinearHypotheses {
    pub fn h3_holds(&self) -> bool {
        self.compatibility_residual < self.compatibility_tol
    }

    pub fn h5_holds(&self) -> bool {
        self.h5_infimum > 0.0
    }

    pub fn h6_holds(&self) -> bool {
        self.h6_violation_count == 0
    }

    pub fn pass(&self) -> bool {
        self.h3_holds() && self.h5_holds() && self.h6_holds()
    }

    pub fn check(&self) -> Result<()> {
        if !self.h3_holds() {
            return Err(Error::Hypothesis {
                hypothesis: "H3",
                detail: format!(
                    "compatibility residual {:.3e} exceeds {:.1e}",
                    self.compatibility_residual, self.compatibility_tol
                ),
            });
        }
        if !self.h5_holds() {
            return Err(Error::Hypothesis {
                hypothesis: "H5",
                detail: format!("inf |∂σF(x0, t, σ, g(x0, t))| = 0 at x0 = {:?}", self.x0),
            });
        }
        if let Some(v) = self.h6_violations.first() {
            return Err(Error::Hypothesis {
                hypothesis: "H6",
                detail: format!(
                    "u F exceeds c u² + d by {:.3e} at x = {:?}, t = {}, σ = {}, u = {} ({} of {} samples)",
                    v.excess, v.x, v.t, v.sigma, v.u, self.h6_violation_count, self.h6_samples
                ),
            });
        }
        Ok(())
    }
}

/// Checks (H3) at `σ(0) = sigma0`, (H5) at `x0` for `|σ| ≤ radius`, and
/// (H6) on samples with `|u| ≤ u_max` when growth constants are set.
pub fn validate_h3_h6(
    data: &ProblemData,
    rhs: &NonlinearRHS,
    sigma0: f64,
    radius: f64,
    x0: &[f64],
    u_max: f64,
    compatibility_tol: f64,
) -> SemilinearHypotheses {
    let compatibility_residual = boundary_samples(&data.domain)
        .iter()
        .map(|x| (data.g_dt(x, 0.0) - data.h_laplacian(x) - rhs.eval(x, 0.0, sigma0, (data.h)(x))).abs())
        .fold(0.0, f64::max);
    let mut h5_infimum = f64::INFINITY;
    for t in time_samples(data.final_time, 40) {
        let g = (data.g)(x0, t);
        for k in 0..=40 {
            let sigma = -radius + 2.0 * radius * k as f64 / 40.0;
            h5_infimum = h5_infimum.min(rhs.d_sigma(x0, t, sigma, g).abs());
        }
    }
    let mut violations = Vec::new();
    let mut samples = 0;
    let h6_checked = rhs.growth().is_some();
    if let Some((c, d)) = rhs.growth() {
        let lengths = data.domain.lengths();
        let per_axis = 9usize;
        let points: Vec<Vec<f64>> = if lengths.len() == 1 {
            (0..per_axis)
                .map(|i| vec![lengths[0] * i as f64 / (per_axis - 1) as f64])
                .collect()
        } else {
            (0..per_axis * per_axis)
                .map(|k| {
                    vec![
                        lengths[0] * (k % per_axis) as f64 / (per_axis - 1) as f64,
                        lengths[1] * (k / per_axis) as f64 / (per_axis - 1) as f64,
                    ]
                })
                .collect()
        };
        for x in &points {
            for t in time_samples(data.final_time, 10) {
                for ks in 0..=4 {
                    let sigma = -radius + 2.0 * radius * ks as f64 / 4.0;
                    for ku in 0..=40 {
                        let u = -u_max + 2.0 * u_max * ku as f64 / 40.0;
                        samples += 1;
                        let excess = u * rhs.eval(x, t, sigma, u) - (c * u * u + d);
                        if excess > 1e-12 * (1.0 + c.abs() * u * u + d.abs()) {
                            violations.push(GrowthViolation {
                                x: x.clone(),
                                t,
                                sigma,
                                u,
                                excess,
                            });
                        }
                    }
                }
            }
        }
    }
    let h6_violation_count = violations.len();
    violations.sort_by(|a, b| b.excess.total_cmp(&a.excess));
    violations.truncate(10);
    SemilinearHypotheses {
        compatibility_residual,
        compatibility_tol,
        h5_infimum,
        h6_checked,
        h6_samples: samples,
        h6_violations: violations,
        h6_violation_count,
        x0: x0.to_vec(),
    }
}
