//! Crank–Nicolson stepping. Both solvers use the midpoint form
//! `(v − u)/Δt − ½Δ_h(v + u) = F(x, t_{n+½}, σ_{n+½}, (v + u)/2) + r̄`
//! with `σ_{n+½}` the mean of the nodal values, so the linear problem is the
//! special case `F = −σ f u` with the same arithmetic.

use super::{CoefficientPath, NonlinearRHS, ProblemData};
use crate::domain::{GridFunction, GridIndex};
use crate::error::{Error, Result};
use crate::linalg::{solve_tridiagonal, BandedMatrix};
use crate::{SpaceFn, SpaceTimeFn};

/// Options shared by both solvers.
#[derive(Clone)]
pub struct SolveOptions {
    /// Manufactured source `r(x, t)` added to the right-hand side.
    pub source: Option<SpaceTimeFn>,
    /// Reject data violating the first-order compatibility condition.
    pub check_compatibility: bool,
    pub compatibility_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            source: None,
            check_compatibility: true,
            compatibility_tol: 1e-6,
            newton_tol: 1e-12,
            newton_max_iters: 25,
        }
    }
}

impl std::fmt::Debug for SolveOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolveOptions")
            .field("source", &self.source.is_some())
            .field("check_compatibility", &self.check_compatibility)
            .field("compatibility_tol", &self.compatibility_tol)
            .field("newton_tol", &self.newton_tol)
            .field("newton_max_iters", &self.newton_max_iters)
            .finish()
    }
}

/// Single time steps on a fixed grid; shared with the reconstruction.
pub(crate) struct Stepper<'a> {
    pub grid: &'a GridIndex,
    pub data: &'a ProblemData,
    interior: Vec<usize>,
    /// Position of each node among the interior unknowns.
    slot: Vec<usize>,
    f_nodes: Vec<f64>,
    source: Option<SpaceTimeFn>,
    newton_tol: f64,
    newton_max_iters: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(grid: &'a GridIndex, data: &'a ProblemData, opts: &SolveOptions) -> Result<Self> {
        if grid.domain != data.domain {
            return Err(Error::InvalidInput(
                "grid and problem data use different domains".into(),
            ));
        }
        let interior: Vec<usize> = grid.interior_nodes().collect();
        let mut slot = vec![usize::MAX; grid.n_nodes()];
        for (k, &n) in interior.iter().enumerate() {
            slot[n] = k;
        }
        let f_nodes = (0..grid.n_nodes()).map(|n| (data.f)(grid.coords(n))).collect();
        Ok(Stepper {
            grid,
            data,
            interior,
            slot,
            f_nodes,
            source: opts.source.clone(),
            newton_tol: opts.newton_tol,
            newton_max_iters: opts.newton_max_iters,
        })
    }

    pub fn initial_level(&self) -> Vec<f64> {
        (0..self.grid.n_nodes())
            .map(|n| (self.data.h)(self.grid.coords(n)))
            .collect()
    }

    fn laplacian_at(&self, u: &[f64], node: usize) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.grid.dimension() {
            let h = self.grid.spacing[a];
            let m = self.grid.step(node, a, -1);
            let p = self.grid.step(node, a, 1);
            acc += (u[m] - 2.0 * u[node] + u[p]) / (h * h);
        }
        acc
    }

    fn source_mean(&self, node: usize, t0: f64, t1: f64) -> f64 {
        match &self.source {
            Some(r) => {
                let x = self.grid.coords(node);
                0.5 * (r(x, t0) + r(x, t1))
            }
            None => 0.0,
        }
    }

    fn boundary_level(&self, t: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.grid.n_nodes()];
        for n in self.grid.boundary_nodes() {
            v[n] = (self.data.g)(self.grid.coords(n), t);
        }
        v
    }

    /// Solve `diag_i v_i − ½(Δ_h v)_i = rhs_i` on interior nodes with `v`
    /// fixed on the boundary. `v` holds the boundary values on entry.
    fn implicit_solve(&self, diag: &[f64], rhs: &[f64], v: &mut [f64]) -> Result<()> {
        let grid = self.grid;
        let m = self.interior.len();
        let mut b = rhs.to_vec();
        let dim = grid.dimension();
        let coef: Vec<f64> = (0..dim).map(|a| 0.5 / grid.spacing[a].powi(2)).collect();
        let mut d: Vec<f64> = diag.to_vec();
        for (k, &node) in self.interior.iter().enumerate() {
            for a in 0..dim {
                d[k] += 2.0 * coef[a];
                for dir in [-1, 1] {
                    let nb = grid.step(node, a, dir);
                    if grid.is_boundary(nb) {
                        b[k] += coef[a] * v[nb];
                    }
                }
            }
        }
        if dim == 1 {
            let off = vec![-coef[0]; m];
            solve_tridiagonal(&off, &d, &off, &mut b)?;
        } else {
            let bw = grid.spec.nx - 2;
            let mut mat = BandedMatrix::zeros(m, bw);
            for (k, &node) in self.interior.iter().enumerate() {
                mat.add(k, k, d[k]);
                for a in 0..dim {
                    for dir in [-1, 1] {
                        let nb = grid.step(node, a, dir);
                        if !grid.is_boundary(nb) {
                            mat.add(k, self.slot[nb], -coef[a]);
                        }
                    }
                }
            }
            mat.factor()?.solve(&mut b);
        }
        for (k, &node) in self.interior.iter().enumerate() {
            v[node] = b[k];
        }
        Ok(())
    }

    /// Linear step from `u` at `t0` to `t1` with nodal coefficients `s0, s1`.
    pub fn step_linear(&self, u: &[f64], t0: f64, t1: f64, s0: f64, s1: f64) -> Result<Vec<f64>> {
        let sm = 0.5 * (s0 + s1);
        let c: Vec<f64> = self.f_nodes.iter().map(|f| sm * f).collect();
        self.step_coefficient(u, t0, t1, &c)
    }

    /// Linear step with the zero-order term `c(x) u` frozen at the half step.
    pub fn step_coefficient(&self, u: &[f64], t0: f64, t1: f64, c: &[f64]) -> Result<Vec<f64>> {
        let dt = t1 - t0;
        let mut v = self.boundary_level(t1);
        let mut diag = Vec::with_capacity(self.interior.len());
        let mut rhs = Vec::with_capacity(self.interior.len());
        for &node in &self.interior {
            let c = c[node];
            if !(dt * c.abs() < 2.0) {
                return Err(Error::Precondition(format!(
                    "Δt·|σ f| = {:.3e} ≥ 2 at t = {t1}; refine the time step",
                    dt * c.abs()
                )));
            }
            diag.push(1.0 / dt + 0.5 * c);
            rhs.push(
                u[node] / dt + 0.5 * self.laplacian_at(u, node) - 0.5 * c * u[node] + self.source_mean(node, t0, t1),
            );
        }
        self.implicit_solve(&diag, &rhs, &mut v)?;
        Ok(v)
    }

    /// Semilinear step by Newton's method from the previous level.
    #[allow(clippy::too_many_arguments)]
    pub fn step_semilinear(
        &self,
        rhs_fn: &NonlinearRHS,
        u: &[f64],
        t0: f64,
        t1: f64,
        s0: f64,
        s1: f64,
        step: usize,
    ) -> Result<Vec<f64>> {
        let dt = t1 - t0;
        let tm = 0.5 * (t0 + t1);
        let sm = 0.5 * (s0 + s1);
        let boundary = self.boundary_level(t1);
        let mut v = u.to_vec();
        for n in self.grid.boundary_nodes() {
            v[n] = boundary[n];
        }
        let lap_u: Vec<f64> = self.interior.iter().map(|&n| self.laplacian_at(u, n)).collect();
        let src: Vec<f64> = self.interior.iter().map(|&n| self.source_mean(n, t0, t1)).collect();
        for _ in 0..self.newton_max_iters {
            let mut diag = Vec::with_capacity(self.interior.len());
            let mut res = Vec::with_capacity(self.interior.len());
            for (k, &node) in self.interior.iter().enumerate() {
                let x = self.grid.coords(node);
                let mid = 0.5 * (v[node] + u[node]);
                let g = (v[node] - u[node]) / dt
                    - 0.5 * (self.laplacian_at(&v, node) + lap_u[k])
                    - rhs_fn.eval(x, tm, sm, mid)
                    - src[k];
                diag.push(1.0 / dt - 0.5 * rhs_fn.d_u(x, tm, sm, mid));
                res.push(-g);
            }
            let mut delta = vec![0.0; self.grid.n_nodes()];
            self.implicit_solve(&diag, &res, &mut delta)
                .map_err(|e| Error::NewtonDivergence {
                    step,
                    t: t1,
                    detail: e.to_string(),
                })?;
            let mut size = 0.0f64;
            let mut scale = 0.0f64;
            for &node in &self.interior {
                v[node] += delta[node];
                size = size.max(delta[node].abs());
                scale = scale.max(v[node].abs());
            }
            if !size.is_finite() {
                return Err(Error::NewtonDivergence {
                    step,
                    t: t1,
                    detail: "non-finite Newton update".into(),
                });
            }
            if size <= self.newton_tol * (1.0 + scale) {
                return Ok(v);
            }
        }
        Err(Error::NewtonDivergence {
            step,
            t: t1,
            detail: format!("no convergence in {} iterations", self.newton_max_iters),
        })
    }
}

fn check_path(sigma: &CoefficientPath, grid: &GridIndex) -> Result<()> {
    if sigma.len() != grid.n_times() {
        return Err(Error::InvalidInput(format!(
            "coefficient path has {} samples, grid has {} time levels",
            sigma.len(),
            grid.n_times()
        )));
    }
    Ok(())
}

fn compatibility_gate(
    data: &ProblemData,
    opts: &SolveOptions,
    residual: impl Fn(&[f64]) -> f64,
    hypothesis: &'static str,
) -> Result<()> {
    if !opts.check_compatibility {
        return Ok(());
    }
    let worst = super::boundary_samples(&data.domain)
        .iter()
        .map(|x| residual(x).abs())
        .fold(0.0, f64::max);
    if !(worst < opts.compatibility_tol) {
        return Err(Error::Hypothesis {
            hypothesis,
            detail: format!(
                "compatibility residual {worst:.3e} on the boundary exceeds {:.1e}",
                opts.compatibility_tol
            ),
        });
    }
    Ok(())
}

/// `∂_t u − Δu + σ(t) f(x) u = r` with `u = g` on `Γ` and `u(·, 0) = h`.
pub fn solve_linear(
    data: &ProblemData,
    sigma: &CoefficientPath,
    grid: &GridIndex,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    check_path(sigma, grid)?;
    let s0 = sigma.values()[0];
    compatibility_gate(
        data,
        opts,
        |x| {
            let r = opts.source.as_ref().map_or(0.0, |r| r(x, 0.0));
            data.g_dt(x, 0.0) - data.h_laplacian(x) + s0 * (data.f)(x) * (data.h)(x) - r
        },
        "H1",
    )?;
    let stepper = Stepper::new(grid, data, opts)?;
    let mut out = GridFunction::zeros(grid);
    out.level_mut(0).copy_from_slice(&stepper.initial_level());
    let sv = sigma.values();
    for n in 0..grid.spec.nt {
        let next = stepper.step_linear(out.level(n), grid.times[n], grid.times[n + 1], sv[n], sv[n + 1])?;
        finite_level(&next, grid, n + 1)?;
        out.level_mut(n + 1).copy_from_slice(&next);
    }
    Ok(out)
}

/// `∂_t u − Δu = F(x, t, σ(t), u) + r` with the same data.
pub fn solve_semilinear(
    data: &ProblemData,
    sigma: &CoefficientPath,
    rhs: &NonlinearRHS,
    grid: &GridIndex,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    check_path(sigma, grid)?;
    let s0 = sigma.values()[0];
    compatibility_gate(
        data,
        opts,
        |x| {
            let r = opts.source.as_ref().map_or(0.0, |r| r(x, 0.0));
            data.g_dt(x, 0.0) - data.h_laplacian(x) - rhs.eval(x, 0.0, s0, (data.h)(x)) - r
        },
        "H3",
    )?;
    let stepper = Stepper::new(grid, data, opts)?;
    let mut out = GridFunction::zeros(grid);
    out.level_mut(0).copy_from_slice(&stepper.initial_level());
    let sv = sigma.values();
    for n in 0..grid.spec.nt {
        let next = stepper.step_semilinear(
            rhs,
            out.level(n),
            grid.times[n],
            grid.times[n + 1],
            sv[n],
            sv[n + 1],
            n + 1,
        )?;
        finite_level(&next, grid, n + 1)?;
        out.level_mut(n + 1).copy_from_slice(&next);
    }
    Ok(out)
}

/// `∂_t u − Δu + Σ_k σ_k(t) f_k(x) u = r`; `data.f` is not used.
pub fn solve_linear_multi(
    data: &ProblemData,
    fs: &[SpaceFn],
    sigmas: &[CoefficientPath],
    grid: &GridIndex,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    if fs.len() != sigmas.len() || fs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "need one coefficient path per f_k, got {} and {}",
            sigmas.len(),
            fs.len()
        )));
    }
    for s in sigmas {
        check_path(s, grid)?;
    }
    compatibility_gate(
        data,
        opts,
        |x| {
            let r = opts.source.as_ref().map_or(0.0, |r| r(x, 0.0));
            let c: f64 = fs.iter().zip(sigmas).map(|(f, s)| s.values()[0] * f(x)).sum();
            data.g_dt(x, 0.0) - data.h_laplacian(x) + c * (data.h)(x) - r
        },
        "H1",
    )?;
    let stepper = Stepper::new(grid, data, opts)?;
    let f_nodes: Vec<Vec<f64>> = fs
        .iter()
        .map(|f| (0..grid.n_nodes()).map(|n| f(grid.coords(n))).collect())
        .collect();
    let mut out = GridFunction::zeros(grid);
    out.level_mut(0).copy_from_slice(&stepper.initial_level());
    for n in 0..grid.spec.nt {
        let mids: Vec<f64> = sigmas
            .iter()
            .map(|s| 0.5 * (s.values()[n] + s.values()[n + 1]))
            .collect();
        let c = combine(&f_nodes, &mids);
        let next = stepper.step_coefficient(out.level(n), grid.times[n], grid.times[n + 1], &c)?;
        finite_level(&next, grid, n + 1)?;
        out.level_mut(n + 1).copy_from_slice(&next);
    }
    Ok(out)
}

/// Nodal `Σ_k σ_k f_k(x)`.
pub(crate) fn combine(f_nodes: &[Vec<f64>], sigmas: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; f_nodes[0].len()];
    for (fk, s) in f_nodes.iter().zip(sigmas) {
        for (ci, f) in c.iter_mut().zip(fk) {
            *ci += s * f;
        }
    }
    c
}

fn finite_level(v: &[f64], grid: &GridIndex, k: usize) -> Result<()> {
    if let Some(node) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteSample {
            node,
            coords: grid.coords(node).to_vec(),
            t: grid.times[k],
            value: v[node],
        });
    }
    Ok(())
}

/// Discrete regularity proxy of a solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionMonitor {
    pub min: f64,
    pub max: f64,
    /// Largest one-sided difference quotient in space.
    pub max_gradient: f64,
    /// Largest centred second difference in space.
    pub max_second_difference: f64,
}

pub fn solution_monitor(u: &GridFunction, grid: &GridIndex) -> SolutionMonitor {
    let mut m = SolutionMonitor {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        max_gradient: 0.0,
        max_second_difference: 0.0,
    };
    for k in 0..u.n_times() {
        let level = u.level(k);
        for node in 0..grid.n_nodes() {
            m.min = m.min.min(level[node]);
            m.max = m.max.max(level[node]);
            let (i, j) = grid.axis_indices(node);
            let idx = [i, j];
            let lens = [grid.spec.nx, grid.spec.ny];
            for a in 0..grid.dimension() {
                let h = grid.spacing[a];
                if idx[a] + 1 < lens[a] {
                    let p = grid.step(node, a, 1);
                    m.max_gradient = m.max_gradient.max((level[p] - level[node]).abs() / h);
                }
                if idx[a] >= 1 && idx[a] + 1 < lens[a] {
                    let p = grid.step(node, a, 1);
                    let q = grid.step(node, a, -1);
                    m.max_second_difference = m
                        .max_second_difference
                        .max((level[p] - 2.0 * level[node] + level[q]).abs() / (h * h));
                }
            }
        }
    }
    m
}
