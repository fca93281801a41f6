//! Recovery of `σ(t)` from Neumann data by sequential collocation or by
//! fixed-point iteration on the Volterra representation.

mod certificate;
mod rootfind;
mod sequential;
mod volterra;

pub use certificate::{add_noise, gronwall_certificate, GronwallReport};
pub use sequential::{reconstruct_multi, reconstruct_semilinear, reconstruct_sequential, sensitivity_kernel};
pub use volterra::{reconstruct_volterra, VolterraOptions};

use crate::domain::GridIndex;
use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::forward::{CoefficientPath, NeumannRecord, NonlinearRHS, ProblemData};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    SequentialCollocation,
    VolterraFixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionConfig {
    pub method: Method,
    pub rootfind_tol: f64,
    pub max_outer_iters: usize,
    pub picard_tol: f64,
    /// Divisors `|g(x₀, t) f(x₀)|` (or `|∂_σ F|`) below this are clamped.
    pub delta_floor: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            method: Method::SequentialCollocation,
            rootfind_tol: 1e-8,
            max_outer_iters: 50,
            picard_tol: 1e-8,
            delta_floor: 1e-8,
        }
    }
}

impl ReconstructionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rootfind_tol > 0.0 && self.picard_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerances must be positive (rootfind_tol = {}, picard_tol = {})",
                self.rootfind_tol, self.picard_tol
            )));
        }
        if !(self.delta_floor >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "delta_floor must be non-negative, got {}",
                self.delta_floor
            )));
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidInput("max_outer_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// A measured Neumann record with the designated observation points, given
/// as indices into the grid's boundary list.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredData {
    pub record: NeumannRecord,
    /// Estimate of `sup |noise|` in `∂_t ∂_ν u`.
    pub noise_level: f64,
    pub points: Vec<usize>,
}

impl MeasuredData {
    pub fn new(record: NeumannRecord, points: Vec<usize>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("no observation point given".into()));
        }
        if let Some(&p) = points.iter().find(|&&p| p >= record.n_points()) {
            return Err(Error::InvalidInput(format!(
                "observation point {p} out of range ({} boundary points)",
                record.n_points()
            )));
        }
        if let Some(i) = record.dt_dnu.iter().chain(&record.dnu).position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("measured value {i} is not finite")));
        }
        Ok(MeasuredData {
            record,
            noise_level: 0.0,
            points,
        })
    }

    pub fn with_noise_level(mut self, level: f64) -> Self {
        self.noise_level = level;
        self
    }

    /// The record restricted to `grid`: every grid time must appear among the
    /// measured times, and every boundary point of the grid among the measured
    /// points (same coordinates and normal). Observation points keep their
    /// position and are renumbered for `grid`.
    pub fn aligned(&self, grid: &GridIndex) -> Result<MeasuredData> {
        let rec = &self.record;
        let span = rec.times.last().copied().unwrap_or(0.0).abs().max(1.0);
        let time_map: Vec<usize> = grid
            .times
            .iter()
            .map(|&t| {
                rec.times
                    .iter()
                    .position(|&s| (s - t).abs() <= 1e-9 * span)
                    .ok_or_else(|| Error::InvalidInput(format!("measured data has no sample at grid time t = {t}")))
            })
            .collect::<Result<_>>()?;
        let same = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        let point_map: Vec<usize> = grid
            .boundary
            .iter()
            .map(|b| {
                let x = grid.coords(b.node);
                rec.points
                    .iter()
                    .zip(&rec.coords)
                    .position(|(p, c)| same(c, x) && p.normal == b.normal)
                    .ok_or_else(|| Error::InvalidInput(format!("measured data has no boundary point at x = {x:?}")))
            })
            .collect::<Result<_>>()?;
        let nb = grid.boundary.len();
        let mut dnu = Vec::with_capacity(nb * time_map.len());
        let mut dt_dnu = Vec::with_capacity(nb * time_map.len());
        for &k in &time_map {
            for &b in &point_map {
                dnu.push(rec.dnu(b, k));
                dt_dnu.push(rec.dt_dnu(b, k));
            }
        }
        let points = self
            .points
            .iter()
            .map(|&p| {
                point_map.iter().position(|&q| q == p).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "observation point at x = {:?} is not a grid boundary point",
                        rec.coords[p]
                    ))
                })
            })
            .collect::<Result<_>>()?;
        Ok(MeasuredData {
            record: NeumannRecord {
                points: grid.boundary.clone(),
                coords: grid.boundary.iter().map(|b| grid.coords(b.node).to_vec()).collect(),
                times: grid.times.clone(),
                dnu,
                dt_dnu,
                order: rec.order,
            },
            noise_level: self.noise_level,
            points,
        })
    }
}

/// Result of a reconstruction. `paths` holds one path per coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub paths: Vec<CoefficientPath>,
    /// Matching residual per time level (zero at `t = 0`).
    pub residuals: Vec<f64>,
    /// Residual evaluations per time level.
    pub evaluations: Vec<usize>,
    /// Sup change of `σ` per outer iteration (Volterra only).
    pub picard_history: Vec<f64>,
    pub warnings: Vec<String>,
    pub points: Vec<usize>,
    /// `inf_t |∂_σ F(x₀, t, σ(t), g(x₀, t))|` for the semilinear method.
    pub sensitivity_infimum: Option<f64>,
}

impl Reconstruction {
    pub fn path(&self) -> &CoefficientPath {
        &self.paths[0]
    }

    /// Per-step history: `t, residual, evaluations`.
    pub fn write_history_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "residual", "evaluations"])?;
        for (k, &t) in self.path().times().iter().enumerate() {
            w.write_record([fmt_f64(t), fmt_f64(self.residuals[k]), self.evaluations[k].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Outer-iteration history: `iteration, sup_change`.
    pub fn write_picard_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iteration", "sup_change"])?;
        for (k, &d) in self.picard_history.iter().enumerate() {
            w.write_record([(k + 1).to_string(), fmt_f64(d)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Boundary point maximising `inf_t |g(x, t) f(x)|` over the grid times.
pub fn choose_x0(data: &ProblemData, grid: &GridIndex) -> usize {
    let score = |b: usize| {
        let x = grid.coords(grid.boundary[b].node);
        let f = (data.f)(x);
        grid.times
            .iter()
            .map(|&t| ((data.g)(x, t) * f).abs())
            .fold(f64::INFINITY, f64::min)
    };
    (0..grid.boundary.len())
        .map(|b| (b, score(b)))
        .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
        .0
}

/// `σ(0)` fixed by the compatibility condition at `x0`: `(Δh − ∂_t g)/(f h)`
/// for the linear problem, the root of `∂_t g − Δh = F(x0, 0, σ, h)` otherwise.
pub fn initial_coefficient(data: &ProblemData, rhs: Option<&NonlinearRHS>, x0: &[f64]) -> Result<f64> {
    let h0 = (data.h)(x0);
    let lhs = data.g_dt(x0, 0.0) - data.h_laplacian(x0);
    match rhs {
        Some(rhs) => Ok(rootfind::bracketed_secant(|s| Ok(lhs - rhs.eval(x0, 0.0, s, h0)), 0.0, 0.1, 1e-14, 0.0)?.x),
        None => {
            let fh = (data.f)(x0) * h0;
            if fh == 0.0 {
                return Err(Error::Hypothesis {
                    hypothesis: "H1",
                    detail: format!("f h vanishes at x0 = {x0:?}, so σ(0) is not determined"),
                });
            }
            Ok(-lhs / fh)
        }
    }
}
