use super::checks::{pde_residual, ResidualReport};
use super::table::{build_axis_table, AxisTable};
use super::{reflected_1d, ParametrixConfig, ZeroOrderCoefficient};
use crate::domain::DomainSpec;
use crate::error::{Error, Result};

/// Summary of the Levi correction and the post-build residual check.
#[derive(Debug, Clone)]
pub struct BuildDiagnostics {
    /// Largest `sup |A_k|` over sources and axes for each correction term.
    pub term_norms: Vec<f64>,
    /// Geometric estimate of the neglected tail.
    pub tail: f64,
    /// Tail at or below `series_tol` on every axis.
    pub converged: bool,
    pub residual: Option<ResidualReport>,
}

/// `K(x, t; y, s)` with the tail estimate of the truncated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeviValue {
    pub value: f64,
    pub tail: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
struct AxisKernel {
    length: f64,
    table: Option<AxisTable>,
}

/// Fundamental solution `U(x, t; y, s)` of `∂_t − Δ − q` with homogeneous
/// Neumann data, stored as `U = H·A` with `A` tabulated per axis.
#[derive(Debug, Clone)]
pub struct KernelEvaluator {
    domain: DomainSpec,
    q: ZeroOrderCoefficient,
    config: ParametrixConfig,
    axes: Vec<AxisKernel>,
    diagnostics: BuildDiagnostics,
}

pub fn build_fundamental_solution(
    q: ZeroOrderCoefficient,
    domain: &DomainSpec,
    config: &ParametrixConfig,
) -> Result<KernelEvaluator> {
    config.validate()?;
    domain.validate()?;
    let lengths = domain.lengths();
    let parts: Vec<ZeroOrderCoefficient> = if lengths.len() == 1 {
        vec![q.clone()]
    } else {
        (0..lengths.len()).map(|a| q.axis_part(a)).collect::<Result<_>>()?
    };
    let mut axes = Vec::new();
    let mut term_norms: Vec<f64> = Vec::new();
    let mut tail = 0.0f64;
    let mut converged = true;
    for (part, &length) in parts.iter().zip(&lengths) {
        if part.is_zero() {
            axes.push(AxisKernel { length, table: None });
            continue;
        }
        if config.levi_terms == 0 {
            axes.push(AxisKernel { length, table: None });
            tail = f64::INFINITY;
            converged = false;
            continue;
        }
        let p = part.clone();
        let qa = move |z: f64, t: f64| p.eval(&[z], t);
        let built = build_axis_table(length, &qa, !part.is_time_independent(), config);
        for (k, v) in built.term_norms.iter().enumerate() {
            if k == term_norms.len() {
                term_norms.push(0.0);
            }
            term_norms[k] = term_norms[k].max(*v);
        }
        tail = tail.max(built.tail);
        converged &= built.converged;
        axes.push(AxisKernel {
            length,
            table: Some(built.table),
        });
    }
    let mut ev = KernelEvaluator {
        domain: *domain,
        q,
        config: config.clone(),
        axes,
        diagnostics: BuildDiagnostics {
            term_norms,
            tail,
            converged,
            residual: None,
        },
    };
    if ev.axes.iter().any(|a| a.table.is_some()) {
        let report = self_check(&ev);
        let worst = report.max_extrapolated;
        ev.diagnostics.residual = Some(report.clone());
        if !(worst <= 10.0 * config.residual_tol) {
            return Err(Error::KernelConstruction(format!(
                "normalized PDE residual {worst:.3e} exceeds 10 x residual_tol = {:.3e} \
                 (raw residuals {:.3e} at h, {:.3e} at h/2 over {} samples); \
                 increase quad_nodes_space / quad_nodes_time",
                10.0 * config.residual_tol,
                report.max_coarse,
                report.max_fine,
                report.residuals.len()
            )));
        }
    }
    Ok(ev)
}

/// Residual samples away from the boundary and the diagonal `t = s`.
fn self_check(ev: &KernelEvaluator) -> ResidualReport {
    let lengths = ev.domain.lengths();
    let horizon = ev.config.time_horizon;
    let time_dependent = !ev.q.is_time_independent();
    let mut samples = Vec::new();
    let fracs = [(0.3, 0.4), (0.55, 0.5), (0.8, 0.7)];
    let elapsed = [0.3, 0.6, 0.9];
    for (k, &(fx, fy)) in fracs.iter().enumerate() {
        for (m, &fe) in elapsed.iter().enumerate() {
            let x: Vec<f64> = lengths.iter().map(|l| fx * l).collect();
            let y: Vec<f64> = lengths.iter().map(|l| fy * l).collect();
            let s = if time_dependent {
                0.25 * horizon * ((k + m) % 3) as f64 / 2.0
            } else {
                0.0
            };
            let e = (fe * (horizon - s)).max(0.05f64.min(0.5 * horizon));
            samples.push((x, s + e, y, s));
        }
    }
    let h = 0.02 * lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    let dt = 0.02 * horizon;
    pde_residual(ev, &samples, h, dt)
}

impl KernelEvaluator {
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn coefficient(&self) -> &ZeroOrderCoefficient {
        &self.q
    }

    pub fn config(&self) -> &ParametrixConfig {
        &self.config
    }

    pub fn diagnostics(&self) -> &BuildDiagnostics {
        &self.diagnostics
    }

    pub fn horizon(&self) -> f64 {
        self.config.time_horizon
    }

    fn check_args(&self, x: &[f64], t: f64, y: &[f64], s: f64) -> Result<()> {
        let dim = self.domain.dimension();
        if x.len() != dim || y.len() != dim {
            return Err(Error::InvalidInput(format!("points must have dimension {dim}")));
        }
        let slack_x = 1e-12 * self.domain.lengths().iter().cloned().fold(0.0, f64::max);
        for p in [x, y] {
            if !self
                .domain
                .lengths()
                .iter()
                .zip(p)
                .all(|(l, v)| *v >= -slack_x && *v <= l + slack_x)
            {
                return Err(Error::Domain(format!("point {p:?} lies outside the domain")));
            }
        }
        if !(s < t) {
            return Err(Error::Domain(format!("kernel needs s < t, got s = {s}, t = {t}")));
        }
        let slack = 1e-9 * self.horizon();
        if t - s > self.horizon() + slack {
            return Err(Error::Domain(format!(
                "elapsed time {} beyond the tabulated horizon {}",
                t - s,
                self.horizon()
            )));
        }
        if !self.q.is_time_independent() && (s < -slack || s > self.horizon() + slack) {
            return Err(Error::Domain(format!(
                "source time {s} outside [0, {}]",
                self.horizon()
            )));
        }
        Ok(())
    }

    /// `U(x, t; y, s)` for `s < t`.
    pub fn eval(&self, x: &[f64], t: f64, y: &[f64], s: f64) -> Result<f64> {
        self.check_args(x, t, y, s)?;
        Ok(self.eval_unchecked(x, t, y, s))
    }

    /// `U(x, t; y, s)` without argument checks; callers guarantee `s < t`.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], t: f64, y: &[f64], s: f64) -> f64 {
        let e = t - s;
        let mut acc = 1.0;
        for (a, axis) in self.axes.iter().enumerate() {
            let h = reflected_1d(x[a], y[a], e, axis.length, self.config.image_terms);
            if h == 0.0 {
                return 0.0;
            }
            acc *= match &axis.table {
                Some(table) => h * table.ratio(x[a], e, y[a], s),
                None => h,
            };
        }
        acc
    }

    /// Parametrix `H(x, e; y)` with the evaluator's image count.
    pub fn parametrix(&self, x: &[f64], y: &[f64], e: f64) -> f64 {
        self.axes
            .iter()
            .enumerate()
            .map(|(a, axis)| reflected_1d(x[a], y[a], e, axis.length, self.config.image_terms))
            .product()
    }

    /// Tabulated ratio `U/H`.
    pub fn ratio(&self, x: &[f64], t: f64, y: &[f64], s: f64) -> Result<f64> {
        self.check_args(x, t, y, s)?;
        let e = t - s;
        Ok(self
            .axes
            .iter()
            .enumerate()
            .map(|(a, axis)| match &axis.table {
                Some(table) => table.ratio(x[a], e, y[a], s),
                None => 1.0,
            })
            .product())
    }

    /// Levi sum `K = Σ_k (−1)^{k+1} J_k`, which equals `q(x, t) U(x, t; y, s)`.
    pub fn levi_series_k(&self, x: &[f64], t: f64, y: &[f64], s: f64) -> Result<LeviValue> {
        self.check_args(x, t, y, s)?;
        if self.q.is_zero() {
            return Ok(LeviValue {
                value: 0.0,
                tail: 0.0,
                converged: true,
            });
        }
        Ok(LeviValue {
            value: self.q.eval(x, t) * self.eval_unchecked(x, t, y, s),
            tail: self.diagnostics.tail,
            converged: self.diagnostics.converged,
        })
    }
}
