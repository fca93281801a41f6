//! Crank–Nicolson solvers for the linear and semilinear problems with
//! Dirichlet data, hypothesis validators and the Neumann observable.

mod hypotheses;
mod scheme;
mod trace;

pub use hypotheses::{
    boundary_samples, validate_h1_h2, validate_h3_h6, GrowthViolation, LinearHypotheses, SemilinearHypotheses,
};
pub(crate) use scheme::{combine, Stepper};
pub use scheme::{solution_monitor, solve_linear, solve_linear_multi, solve_semilinear, SolutionMonitor, SolveOptions};
pub(crate) use trace::outward_derivative;
pub use trace::{neumann_trace, NeumannRecord};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::{fd, fmt_f64, SpaceFn, SpaceTimeFn};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::sync::Arc;

/// Samples of `σ(t)` on a time grid, linearly interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl CoefficientPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "coefficient path needs matching times and values (at least 2), got {} and {}",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("coefficient times must increase".into()));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "coefficient value at t = {} is not finite",
                times[k]
            )));
        }
        Ok(CoefficientPath { times, values })
    }

    pub fn from_fn(times: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(times.to_vec(), times.iter().map(|&t| f(t)).collect())
    }

    pub fn constant(times: &[f64], c: f64) -> Result<Self> {
        Self::from_fn(times, |_| c)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Piecewise-linear value, held constant outside the sampled range.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.values[0];
        }
        if t >= self.times[n - 1] {
            return self.values[n - 1];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.values[k] + w * (self.values[k + 1] - self.values[k])
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest difference quotient between consecutive samples.
    pub fn derivative_sup(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, v)| ((v[1] - v[0]) / (t[1] - t[0])).abs())
            .fold(0.0, f64::max)
    }

    /// `max(sup |σ|, sup |σ'|)` with the derivative by differences.
    pub fn c1_norm(&self) -> f64 {
        self.sup().max(self.derivative_sup())
    }

    pub fn in_ball(&self, radius: f64) -> bool {
        self.c1_norm() <= radius
    }

    pub fn sup_diff(&self, other: &CoefficientPath) -> Result<f64> {
        if self.times.len() != other.times.len() {
            return Err(Error::InvalidInput(format!(
                "paths have {} and {} samples",
                self.times.len(),
                other.times.len()
            )));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// CSV with columns `t, sigma_reconstructed` and, given a reference,
    /// `sigma_true, abs_error`.
    pub fn write_csv<W: Write>(&self, truth: Option<&CoefficientPath>, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match truth {
            Some(_) => w.write_record(["t", "sigma_reconstructed", "sigma_true", "abs_error"])?,
            None => w.write_record(["t", "sigma_reconstructed"])?,
        }
        for (k, (&t, &v)) in self.times.iter().zip(&self.values).enumerate() {
            let mut row = vec![fmt_f64(t), fmt_f64(v)];
            if let Some(tr) = truth {
                let s = tr.values.get(k).copied().unwrap_or_else(|| tr.eval(t));
                row.push(fmt_f64(s));
                row.push(fmt_f64((v - s).abs()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Coefficient `f`, Dirichlet data `g`, initial data `h` and the horizon `T`.
#[derive(Clone)]
pub struct ProblemData {
    pub domain: DomainSpec,
    pub f: SpaceFn,
    pub g: SpaceTimeFn,
    pub h: SpaceFn,
    pub final_time: f64,
    g_dt: Option<SpaceTimeFn>,
    h_laplacian: Option<SpaceFn>,
}

impl std::fmt::Debug for ProblemData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemData")
            .field("domain", &self.domain)
            .field("final_time", &self.final_time)
            .finish_non_exhaustive()
    }
}

impl ProblemData {
    /// Checks `g(·, 0) = h` on `Γ`.
    pub fn new(
        domain: DomainSpec,
        f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        g: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        h: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        final_time: f64,
    ) -> Result<Self> {
        Self::from_parts(domain, Arc::new(f), Arc::new(g), Arc::new(h), final_time)
    }

    pub fn from_parts(domain: DomainSpec, f: SpaceFn, g: SpaceTimeFn, h: SpaceFn, final_time: f64) -> Result<Self> {
        domain.validate()?;
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        for x in boundary_samples(&domain) {
            let (gv, hv) = (g(&x, 0.0), h(&x));
            if !((gv - hv).abs() <= 1e-10 * (1.0 + hv.abs())) {
                return Err(Error::InvalidInput(format!(
                    "boundary data g(x, 0) = {gv} differs from initial data h(x) = {hv} at x = {x:?}"
                )));
            }
        }
        Ok(ProblemData {
            domain,
            f,
            g,
            h,
            final_time,
            g_dt: None,
            h_laplacian: None,
        })
    }

    /// Exact `∂_t g`, used instead of finite differences.
    pub fn with_g_dt(mut self, g_dt: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.g_dt = Some(Arc::new(g_dt));
        self
    }

    /// Exact `Δh`, used instead of finite differences.
    pub fn with_h_laplacian(mut self, lap: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.h_laplacian = Some(Arc::new(lap));
        self
    }

    pub fn g_dt(&self, x: &[f64], t: f64) -> f64 {
        match &self.g_dt {
            Some(d) => d(x, t),
            None => fd::d1(|s| (self.g)(x, s), t, 0.0, f64::INFINITY, 1e-3 * self.final_time),
        }
    }

    /// `Δh(x)`, by one-sided differences of step `2·10⁻³ L` near `Γ`.
    pub fn h_laplacian(&self, x: &[f64]) -> f64 {
        if let Some(lap) = &self.h_laplacian {
            return lap(x);
        }
        let dim = x.len();
        let base = [x[0], x.get(1).copied().unwrap_or(0.0)];
        (0..dim)
            .map(|a| {
                let l = self.domain.length(a);
                fd::d2(
                    |v| {
                        let mut p = base;
                        p[a] = v;
                        (self.h)(&p[..dim])
                    },
                    x[a],
                    0.0,
                    l,
                    2e-3 * l,
                )
            })
            .sum()
    }
}

/// `F(x, t, σ, u)` and its partial derivatives.
pub type RhsFn = Arc<dyn Fn(&[f64], f64, f64, f64) -> f64 + Send + Sync>;

/// Right-hand side of `∂_t u − Δu = F(x, t, σ(t), u)`.
#[derive(Clone)]
pub struct NonlinearRHS {
    f: RhsFn,
    d_sigma: RhsFn,
    d_u: RhsFn,
    growth: Option<(f64, f64)>,
}

impl std::fmt::Debug for NonlinearRHS {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NonlinearRHS")
            .field("growth", &self.growth)
            .finish_non_exhaustive()
    }
}

impl NonlinearRHS {
    pub fn new(
        f: impl Fn(&[f64], f64, f64, f64) -> f64 + Send + Sync + 'static,
        d_sigma: impl Fn(&[f64], f64, f64, f64) -> f64 + Send + Sync + 'static,
        d_u: impl Fn(&[f64], f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        NonlinearRHS {
            f: Arc::new(f),
            d_sigma: Arc::new(d_sigma),
            d_u: Arc::new(d_u),
            growth: None,
        }
    }

    pub fn from_parts(f: RhsFn, d_sigma: RhsFn, d_u: RhsFn) -> Self {
        NonlinearRHS {
            f,
            d_sigma,
            d_u,
            growth: None,
        }
    }

    /// `F = −σ f(x) u`, the linear problem.
    pub fn linear(f: SpaceFn) -> Self {
        let (f1, f2, f3) = (f.clone(), f.clone(), f);
        Self::new(
            move |x, _, s, u| -s * f1(x) * u,
            move |x, _, _, u| -f2(x) * u,
            move |x, _, s, _| -s * f3(x),
        )
    }

    /// Constants of the one-sided growth bound `u F ≤ c u² + d`.
    pub fn with_growth(mut self, c: f64, d: f64) -> Self {
        self.growth = Some((c, d));
        self
    }

    pub fn growth(&self) -> Option<(f64, f64)> {
        self.growth
    }

    pub fn eval(&self, x: &[f64], t: f64, sigma: f64, u: f64) -> f64 {
        (self.f)(x, t, sigma, u)
    }

    pub fn d_sigma(&self, x: &[f64], t: f64, sigma: f64, u: f64) -> f64 {
        (self.d_sigma)(x, t, sigma, u)
    }

    pub fn d_u(&self, x: &[f64], t: f64, sigma: f64, u: f64) -> f64 {
        (self.d_u)(x, t, sigma, u)
    }

    /// Largest scaled mismatch `|∂F − FD| / max(|∂F|, 1)` of both supplied
    /// derivatives against central differences at 20 random points with
    /// `t ∈ [0, T]`, `|σ| ≤ M`, `|u| ≤ u_max`. Fails above `10⁻⁵`.
    pub fn check_derivatives(
        &self,
        domain: &DomainSpec,
        final_time: f64,
        radius: f64,
        u_max: f64,
        seed: u64,
    ) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lengths = domain.lengths();
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let x: Vec<f64> = lengths.iter().map(|l| rng.random::<f64>() * l).collect();
            let t = rng.random::<f64>() * final_time;
            let s = (2.0 * rng.random::<f64>() - 1.0) * radius;
            let u = (2.0 * rng.random::<f64>() - 1.0) * u_max;
            let es = 1e-5 * (1.0 + s.abs());
            let eu = 1e-5 * (1.0 + u.abs());
            let fd_s = (self.eval(&x, t, s + es, u) - self.eval(&x, t, s - es, u)) / (2.0 * es);
            let fd_u = (self.eval(&x, t, s, u + eu) - self.eval(&x, t, s, u - eu)) / (2.0 * eu);
            let a_s = self.d_sigma(&x, t, s, u);
            let a_u = self.d_u(&x, t, s, u);
            worst = worst
                .max((a_s - fd_s).abs() / a_s.abs().max(1.0))
                .max((a_u - fd_u).abs() / a_u.abs().max(1.0));
        }
        if worst > 1e-5 {
            return Err(Error::InvalidInput(format!(
                "supplied derivatives of F disagree with finite differences (scaled error {worst:.3e})"
            )));
        }
        Ok(worst)
    }
}
