//! Fixed-point reconstruction through the Volterra representation.
//!
//! With `σ₂` the reference coefficient, `u₂` its solution and `u₁` the solution
//! for the unknown `σ₁`, the difference `w = u₁ − u₂` solves
//! `∂_t w − Δw + σ₂ f w = σ f u₁` with `σ = σ₂ − σ₁` and vanishes on `Γ`.
//! Representing `w` by the kernel of `∂_t − Δ + σ₂ f` and differentiating
//! `w(x₀, t) = 0` in time gives, at every `t`,
//!
//! `σ(t) f(x₀) g(x₀, t) + ∂_t-integral part of VP[σ f u₁](x₀, t) = −∂_t SLP[∂_ν w](x₀, t)`.
//!
//! `σ` is piecewise linear in time, so the volume term becomes a lower
//! triangular matrix assembled cell by cell (product trapezoid rule). `u₁` is
//! refreshed from the current `σ₁` between sweeps.

use super::{MeasuredData, Reconstruction, ReconstructionConfig};
use crate::domain::{BoundaryPoint, GridIndex};
use crate::error::{Error, Result};
use crate::forward::{
    boundary_samples, neumann_trace, outward_derivative, solve_linear, CoefficientPath, ProblemData, SolveOptions,
};
use crate::heat_kernel::KernelEvaluator;
use crate::potentials::{
    boundary_rule, layer_coefficient_term, time_slices, volume_coefficient_term, CoefficientPoint, LayerDensity,
    PotentialQuadrature, VolumeDensity,
};
use crate::quadrature::DomainRule;
use crate::spline::{Axis, EndSlope, TensorSpline};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraOptions {
    /// Spatial nodes per panel and the nested rules of the `∂_t q` terms.
    pub quadrature: PotentialQuadrature,
    /// Gauss nodes in `u = √(t − τ)` per time cell.
    pub cell_nodes: usize,
}

impl Default for VolterraOptions {
    fn default() -> Self {
        VolterraOptions {
            quadrature: PotentialQuadrature::default(),
            cell_nodes: 6,
        }
    }
}

/// Linear interpolation of values attached to the grid's boundary points
/// along the edge containing `y`.
#[derive(Clone)]
struct EdgeLookup {
    lengths: Vec<f64>,
    /// `(axis, orientation, [(tangent coordinate, boundary index)])`.
    edges: Vec<(usize, f64, Vec<(f64, usize)>)>,
}

impl EdgeLookup {
    fn new(grid: &GridIndex) -> Self {
        let dim = grid.dimension();
        let mut edges: Vec<(usize, f64, Vec<(f64, usize)>)> = Vec::new();
        for (k, b) in grid.boundary.iter().enumerate() {
            let tangent = if dim == 2 { grid.coords(b.node)[1 - b.axis] } else { 0.0 };
            let key = (b.axis, b.orientation());
            match edges.iter_mut().find(|e| (e.0, e.1) == key) {
                Some(e) => e.2.push((tangent, k)),
                None => edges.push((key.0, key.1, vec![(tangent, k)])),
            }
        }
        for e in &mut edges {
            e.2.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        EdgeLookup {
            lengths: grid.domain.lengths(),
            edges,
        }
    }

    /// Two boundary indices and the weight of the first.
    fn locate(&self, y: &[f64]) -> (usize, usize, f64) {
        let dim = self.lengths.len();
        let edge = self
            .edges
            .iter()
            .min_by(|a, b| {
                let da = (y[a.0] - if a.1 < 0.0 { 0.0 } else { self.lengths[a.0] }).abs();
                let db = (y[b.0] - if b.1 < 0.0 { 0.0 } else { self.lengths[b.0] }).abs();
                da.total_cmp(&db)
            })
            .expect("grid has boundary points");
        let pts = &edge.2;
        if dim == 1 || pts.len() == 1 {
            return (pts[0].1, pts[0].1, 1.0);
        }
        let c = y[1 - edge.0];
        let k = pts.partition_point(|p| p.0 <= c).clamp(1, pts.len() - 1) - 1;
        let w = ((pts[k + 1].0 - c) / (pts[k + 1].0 - pts[k].0)).clamp(0.0, 1.0);
        (pts[k].1, pts[k + 1].1, w)
    }
}

/// Boundary data `[level][boundary index]` interpolated in time and along edges.
#[derive(Clone)]
struct BoundaryField {
    lookup: Arc<EdgeLookup>,
    values: Arc<Vec<Vec<f64>>>,
    dt: f64,
}

impl BoundaryField {
    fn at(&self, loc: (usize, usize, f64), level: usize) -> f64 {
        let v = &self.values[level];
        loc.2 * v[loc.0] + (1.0 - loc.2) * v[loc.1]
    }

    fn eval(&self, y: &[f64], tau: f64) -> f64 {
        let (k, theta) = cell(tau, self.dt, self.values.len());
        let loc = self.lookup.locate(y);
        (1.0 - theta) * self.at(loc, k) + theta * self.at(loc, k + 1)
    }
}

/// Cell index and position within the cell for `τ` on a uniform time grid.
fn cell(tau: f64, dt: f64, levels: usize) -> (usize, f64) {
    let x = (tau / dt).clamp(0.0, (levels - 1) as f64);
    let k = (x.floor() as usize).min(levels - 2);
    (k, x - k as f64)
}

/// Spatial cubic splines of a nodal field, one per time level.
#[derive(Clone)]
struct VolumeField {
    levels: Arc<Vec<TensorSpline>>,
    dim: usize,
    dt: f64,
}

impl VolumeField {
    fn new(grid: &GridIndex, values: &[Vec<f64>]) -> Self {
        let dim = grid.dimension();
        let axis = |len: usize, step: f64| Axis {
            start: 0.0,
            step,
            len,
            ends: EndSlope::Estimated,
        };
        let levels = values
            .iter()
            .map(|v| {
                if dim == 1 {
                    TensorSpline::new(vec![axis(grid.spec.nx, grid.spacing[0])], v.clone())
                } else {
                    TensorSpline::new(
                        vec![axis(grid.spec.ny, grid.spacing[1]), axis(grid.spec.nx, grid.spacing[0])],
                        v.clone(),
                    )
                }
            })
            .collect();
        VolumeField {
            levels: Arc::new(levels),
            dim,
            dt: grid.dt(),
        }
    }

    fn at(&self, y: &[f64], level: usize) -> f64 {
        if self.dim == 1 {
            self.levels[level].eval(y)
        } else {
            self.levels[level].eval(&[y[1], y[0]])
        }
    }

    fn eval(&self, y: &[f64], tau: f64) -> f64 {
        let (k, theta) = cell(tau, self.dt, self.levels.len());
        (1.0 - theta) * self.at(y, k) + theta * self.at(y, k + 1)
    }
}

/// Kernel weight `w U(x₀, t_n; y, τ)` at one quadrature node of cell `j`.
struct VolumeNode {
    n: usize,
    j: usize,
    theta: f64,
    y: [f64; 2],
    weight: f64,
}

struct LayerNode {
    n: usize,
    j: usize,
    theta: f64,
    loc: (usize, usize, f64),
    weight: f64,
}

/// Quadrature nodes of all cells `[t_j, t_{j+1}]`, `j < n`, for every target
/// time `t_n`. They do not depend on the density and are reused across sweeps.
fn assemble_nodes(
    ev: &KernelEvaluator,
    grid: &GridIndex,
    x0: &[f64],
    lookup: &EdgeLookup,
    opts: &VolterraOptions,
) -> (Vec<VolumeNode>, Vec<LayerNode>) {
    let dim = grid.dimension();
    let dt = grid.dt();
    let ns = opts.quadrature.space_nodes;
    let mut vol = Vec::new();
    let mut lay = Vec::new();
    for n in 1..grid.n_times() {
        let t = grid.times[n];
        for j in 0..n {
            let (a, b) = (grid.times[j], grid.times[j + 1]);
            for (tau, u, w) in time_slices(t, a, b, opts.cell_nodes) {
                let theta = ((tau - a) / dt).clamp(0.0, 1.0);
                let sd = std::f64::consts::SQRT_2 * u;
                let space = DomainRule::windowed(ev.domain(), x0, sd, ns);
                for (p, pw) in space.points.iter().zip(&space.weights) {
                    let weight = w * pw * ev.eval_unchecked(x0, t, &p[..dim], tau);
                    vol.push(VolumeNode {
                        n,
                        j,
                        theta,
                        y: *p,
                        weight,
                    });
                }
                for node in boundary_rule(ev.domain(), x0, sd, ns) {
                    let y = &node.point[..dim];
                    let weight = w * node.weight * ev.eval_unchecked(x0, t, y, tau);
                    lay.push(LayerNode {
                        n,
                        j,
                        theta,
                        loc: lookup.locate(y),
                        weight,
                    });
                }
            }
        }
    }
    (vol, lay)
}

/// Nodal Laplacian of one level: centred inside, one-sided on `Γ`.
fn nodal_laplacian(grid: &GridIndex, v: &[f64]) -> Vec<f64> {
    let lens = [grid.spec.nx, grid.spec.ny];
    (0..grid.n_nodes())
        .map(|node| {
            let (i, j) = grid.axis_indices(node);
            let idx = [i, j];
            (0..grid.dimension())
                .map(|a| {
                    let h2 = grid.spacing[a].powi(2);
                    let at = |k: isize| v[grid.step(node, a, k)];
                    if idx[a] == 0 {
                        (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / h2
                    } else if idx[a] == lens[a] - 1 {
                        (2.0 * at(0) - 5.0 * at(-1) + 4.0 * at(-2) - at(-3)) / h2
                    } else {
                        (at(-1) - 2.0 * at(0) + at(1)) / h2
                    }
                })
                .sum()
        })
        .collect()
}

fn check_evaluator(
    ev: &KernelEvaluator,
    data: &ProblemData,
    reference: &CoefficientPath,
    grid: &GridIndex,
) -> Result<()> {
    if ev.domain() != &grid.domain {
        return Err(Error::InvalidInput("kernel and grid use different domains".into()));
    }
    if ev.horizon() < grid.spec.final_time * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!(
            "kernel horizon {} is shorter than the final time {}",
            ev.horizon(),
            grid.spec.final_time
        )));
    }
    let q = ev.coefficient();
    let step = (grid.n_times() / 8).max(1);
    for x in boundary_samples(&grid.domain) {
        for &t in grid.times.iter().step_by(step) {
            let want = -reference.eval(t) * (data.f)(&x);
            let got = q.eval(&x, t);
            if (got - want).abs() > 1e-8 * (1.0 + want.abs()) {
                return Err(Error::InvalidInput(format!(
                    "kernel coefficient q({x:?}, {t}) = {got} differs from −σ₂ f = {want}"
                )));
            }
        }
    }
    Ok(())
}

/// Recover `σ₁` from measured data given a reference `σ₂` and the kernel of
/// `∂_t − Δ − q` with `q = −σ₂ f`. Only the first observation point is used.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_volterra(
    data: &ProblemData,
    measured: &MeasuredData,
    reference: &CoefficientPath,
    ev: &KernelEvaluator,
    grid: &GridIndex,
    config: &ReconstructionConfig,
    opts: &VolterraOptions,
) -> Result<Reconstruction> {
    config.validate()?;
    if reference.len() != grid.n_times() {
        return Err(Error::InvalidInput(format!(
            "reference path has {} samples, grid has {} time levels",
            reference.len(),
            grid.n_times()
        )));
    }
    check_evaluator(ev, data, reference, grid)?;
    let m = measured.aligned(grid)?;
    let b0 = m.points[0];
    let bp: BoundaryPoint = grid.boundary[b0];
    let x0 = grid.coords(bp.node).to_vec();
    let f0 = (data.f)(&x0);
    let nt = grid.n_times();
    let nb = grid.boundary.len();
    let dt = grid.dt();
    let quad = &opts.quadrature;
    let mut warnings = Vec::new();
    let unchecked = SolveOptions {
        check_compatibility: false,
        ..SolveOptions::default()
    };

    // Data side: the trace of w and its time derivative.
    let u2 = solve_linear(data, reference, grid, &unchecked)?;
    let rec2 = neumann_trace(&u2, grid)?;
    let lookup = Arc::new(EdgeLookup::new(grid));
    let diff =
        |a: &[f64], b: &[f64], k: usize| -> Vec<f64> { (0..nb).map(|i| a[k * nb + i] - b[k * nb + i]).collect() };
    let start = diff(&m.record.dnu, &rec2.dnu, 0);
    let trace_gap = BoundaryField {
        lookup: lookup.clone(),
        values: Arc::new(
            (0..nt)
                .map(|k| {
                    diff(&m.record.dnu, &rec2.dnu, k)
                        .iter()
                        .zip(&start)
                        .map(|(v, s)| v - s)
                        .collect()
                })
                .collect(),
        ),
        dt,
    };
    let trace_gap_dt = BoundaryField {
        lookup: lookup.clone(),
        values: Arc::new((0..nt).map(|k| diff(&m.record.dt_dnu, &rec2.dt_dnu, k)).collect()),
        dt,
    };

    let (vol_nodes, lay_nodes) = assemble_nodes(ev, grid, &x0, &lookup, opts);
    let mut rhs = vec![0.0; nt];
    for node in &lay_nodes {
        let d =
            (1.0 - node.theta) * trace_gap_dt.at(node.loc, node.j) + node.theta * trace_gap_dt.at(node.loc, node.j + 1);
        rhs[node.n] -= node.weight * d;
    }
    if !ev.coefficient().is_time_independent() {
        let (g, gd) = (trace_gap.clone(), trace_gap_dt.clone());
        let layer = LayerDensity::new(move |y, tau| g.eval(y, tau)).with_time_derivative(move |y, tau| gd.eval(y, tau));
        for n in 1..nt {
            rhs[n] -= layer_coefficient_term(ev, &layer, &x0, grid.times[n], 0.0, quad);
        }
    }

    let h0 = (data.h)(&x0);
    let mut d0 = f0 * h0;
    if d0.abs() < config.delta_floor || d0 == 0.0 {
        warnings.push(format!("|g f| at x0 = {d0:.3e} below the floor at t = 0; clamped"));
        d0 = config.delta_floor.max(f64::MIN_POSITIVE).copysign(d0);
    }
    let sigma1_0 = (data.h_laplacian(&x0) - data.g_dt(&x0, 0.0)) / d0;
    let sigma_0 = reference.values()[0] - sigma1_0;

    let ref_values = reference.values().to_vec();
    let mut sigma = vec![0.0; nt];
    let mut history: Vec<f64> = Vec::new();
    let mut last_change = vec![0.0; nt];
    let mut rising = 0;
    let mut converged = false;
    for _ in 0..config.max_outer_iters {
        let sigma1: Vec<f64> = ref_values.iter().zip(&sigma).map(|(a, b)| a - b).collect();
        let sigma1_path = CoefficientPath::new(grid.times.clone(), sigma1)?;
        let u1 = solve_linear(data, &sigma1_path, grid, &unchecked)?;
        let f_nodes: Vec<f64> = (0..grid.n_nodes()).map(|n| (data.f)(grid.coords(n))).collect();
        let mut p_levels = Vec::with_capacity(nt);
        let mut l_levels = Vec::with_capacity(nt);
        let mut n_levels = Vec::with_capacity(nt);
        let q = ev.coefficient();
        for k in 0..nt {
            let p: Vec<f64> = u1.level(k).iter().zip(&f_nodes).map(|(u, f)| u * f).collect();
            let lap = nodal_laplacian(grid, &p);
            let t = grid.times[k];
            let l: Vec<f64> = (0..grid.n_nodes())
                .map(|node| {
                    let qv = match quad.coefficient_point {
                        CoefficientPoint::Integration => q.eval(grid.coords(node), t),
                        CoefficientPoint::Target => q.eval(&x0, t),
                    };
                    lap[node] + qv * p[node]
                })
                .collect();
            n_levels.push(
                grid.boundary
                    .iter()
                    .map(|b| outward_derivative(grid, &p, b))
                    .collect::<Vec<f64>>(),
            );
            p_levels.push(p);
            l_levels.push(l);
        }
        let density = VolumeField::new(grid, &l_levels);
        let normal = BoundaryField {
            lookup: lookup.clone(),
            values: Arc::new(n_levels),
            dt,
        };
        let mut kernel = vec![vec![0.0; nt]; nt];
        for node in &vol_nodes {
            let y = &node.y[..grid.dimension()];
            let v = node.weight * ((1.0 - node.theta) * density.at(y, node.j) + node.theta * density.at(y, node.j + 1));
            kernel[node.n][node.j] += (1.0 - node.theta) * v;
            kernel[node.n][node.j + 1] += node.theta * v;
        }
        for node in &lay_nodes {
            let v = node.weight
                * ((1.0 - node.theta) * normal.at(node.loc, node.j) + node.theta * normal.at(node.loc, node.j + 1));
            kernel[node.n][node.j] -= (1.0 - node.theta) * v;
            kernel[node.n][node.j + 1] -= node.theta * v;
        }
        let mut coefficient = vec![0.0; nt];
        if !q.is_time_independent() {
            let field = VolumeField::new(grid, &p_levels);
            let lagged = CoefficientPath::new(grid.times.clone(), sigma.clone())?;
            let phi = VolumeDensity::smooth(move |y, tau| lagged.eval(tau) * field.eval(y, tau));
            for n in 1..nt {
                coefficient[n] = volume_coefficient_term(ev, &phi, &x0, grid.times[n], 0.0, quad);
            }
        }

        let mut next = vec![0.0; nt];
        next[0] = sigma_0;
        for n in 1..nt {
            let t = grid.times[n];
            let mut divisor = f0 * (data.g)(&x0, t) + kernel[n][n];
            if divisor.abs() < config.delta_floor || divisor == 0.0 {
                warnings.push(format!(
                    "Volterra divisor {divisor:.3e} below the floor at t = {t}; clamped"
                ));
                divisor = config.delta_floor.max(f64::MIN_POSITIVE).copysign(divisor);
            }
            let known: f64 = (0..n).map(|mi| kernel[n][mi] * next[mi]).sum();
            next[n] = (rhs[n] - coefficient[n] - known) / divisor;
        }
        if let Some(k) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonContraction(format!(
                "σ became non-finite at t = {}; use a shorter horizon or the sequential method",
                grid.times[k]
            )));
        }
        let change = next.iter().zip(&sigma).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        last_change = next.iter().zip(&sigma).map(|(a, b)| (a - b).abs()).collect();
        sigma = next;
        if let Some(&prev) = history.last() {
            rising = if change > prev { rising + 1 } else { 0 };
        }
        history.push(change);
        if change < config.picard_tol {
            converged = true;
            break;
        }
        if rising >= 3 {
            return Err(Error::NonContraction(format!(
                "sup change grew for 3 consecutive sweeps (last {change:.3e}); use a shorter horizon or the sequential method"
            )));
        }
    }
    if !converged {
        return Err(Error::NonContraction(format!(
            "no convergence in {} sweeps (last change {:.3e}); use a shorter horizon or the sequential method",
            config.max_outer_iters,
            history.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let sigma1: Vec<f64> = ref_values.iter().zip(&sigma).map(|(a, b)| a - b).collect();
    let sweeps = history.len();
    Ok(Reconstruction {
        paths: vec![CoefficientPath::new(grid.times.clone(), sigma1)?],
        residuals: last_change,
        evaluations: vec![sweeps; nt],
        picard_history: history,
        warnings,
        points: vec![b0],
        sensitivity_infimum: None,
    })
}
