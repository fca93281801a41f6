//! Sequential collocation: one matching problem per time step. The matched
//! quantity is the backward quotient `(∂_ν u(x₀, t_n) − ∂_ν u(x₀, t_{n−1}))/Δt`
//! of the model against the same quotient of the measurement, which is the
//! causal form of matching `∂_t ∂_ν u` at `x₀`.

use super::rootfind::bracketed_secant;
use super::{MeasuredData, Reconstruction, ReconstructionConfig};
use crate::domain::{BoundaryPoint, GridFunction, GridIndex};
use crate::error::{Error, Result};
use crate::forward::{combine, outward_derivative, CoefficientPath, NonlinearRHS, ProblemData, SolveOptions, Stepper};
use crate::quadrature;
use crate::SpaceFn;
use nalgebra::{DMatrix, DVector};

/// `d` pushed away from zero to at least `floor` in magnitude.
fn clamp_divisor(d: f64, floor: f64, what: &str, t: f64, warnings: &mut Vec<String>) -> f64 {
    if d.abs() >= floor && d != 0.0 {
        return d;
    }
    warnings.push(format!(
        "{what} = {d:.3e} below the floor {floor:.1e} at t = {t}; clamped"
    ));
    let floor = if floor > 0.0 { floor } else { f64::MIN_POSITIVE };
    if d < 0.0 {
        -floor
    } else {
        floor
    }
}

struct Observation {
    point: BoundaryPoint,
    x: Vec<f64>,
    index: usize,
}

fn observations(measured: &MeasuredData, grid: &GridIndex) -> Vec<Observation> {
    measured
        .points
        .iter()
        .map(|&b| Observation {
            point: grid.boundary[b],
            x: grid.coords(grid.boundary[b].node).to_vec(),
            index: b,
        })
        .collect()
}

fn measured_quotient(m: &MeasuredData, b: usize, n: usize, dt: f64) -> f64 {
    (m.record.dnu(b, n) - m.record.dnu(b, n - 1)) / dt
}

fn unchecked() -> SolveOptions {
    SolveOptions {
        check_compatibility: false,
        ..SolveOptions::default()
    }
}

fn finish(
    grid: &GridIndex,
    paths: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    evaluations: Vec<usize>,
    warnings: Vec<String>,
    points: Vec<usize>,
) -> Result<Reconstruction> {
    Ok(Reconstruction {
        paths: paths
            .into_iter()
            .map(|v| CoefficientPath::new(grid.times.clone(), v))
            .collect::<Result<_>>()?,
        residuals,
        evaluations,
        picard_history: Vec::new(),
        warnings,
        points,
        sensitivity_infimum: None,
    })
}

/// `σ(t_n)` for the linear problem, marching from the compatibility value
/// `σ(0) = (Δh − ∂_t g)/(f h)` at `x₀`. Only the first observation point is used.
pub fn reconstruct_sequential(
    data: &ProblemData,
    measured: &MeasuredData,
    grid: &GridIndex,
    config: &ReconstructionConfig,
) -> Result<Reconstruction> {
    config.validate()?;
    let m = measured.aligned(grid)?;
    let obs = &observations(&m, grid)[0];
    let mut warnings = Vec::new();
    let f0 = (data.f)(&obs.x);
    let divisor = clamp_divisor(
        f0 * (data.h)(&obs.x),
        config.delta_floor,
        "|g f| at x0",
        0.0,
        &mut warnings,
    );
    let sigma0 = (data.h_laplacian(&obs.x) - data.g_dt(&obs.x, 0.0)) / divisor;

    let stepper = Stepper::new(grid, data, &unchecked())?;
    let dt = grid.dt();
    let mut u = stepper.initial_level();
    let mut prev_trace = outward_derivative(grid, &u, &obs.point);
    let mut sigma = vec![sigma0];
    let mut residuals = vec![0.0];
    let mut evaluations = vec![0];
    for n in 1..grid.n_times() {
        let (t0, t1) = (grid.times[n - 1], grid.times[n]);
        let gf = (data.g)(&obs.x, t1) * f0;
        if gf.abs() < config.delta_floor {
            clamp_divisor(gf, config.delta_floor, "|g f| at x0", t1, &mut warnings);
        }
        let target = measured_quotient(&m, obs.index, n, dt);
        let prev = sigma[n - 1];
        let residual = |s: f64| -> Result<f64> {
            let v = stepper.step_linear(&u, t0, t1, prev, s)?;
            Ok((outward_derivative(grid, &v, &obs.point) - prev_trace) / dt - target)
        };
        let root = bracketed_secant(residual, prev, 1e-3 * (1.0 + prev.abs()), config.rootfind_tol, t1)?;
        u = stepper.step_linear(&u, t0, t1, prev, root.x)?;
        prev_trace = outward_derivative(grid, &u, &obs.point);
        sigma.push(root.x);
        residuals.push(root.residual.abs());
        evaluations.push(root.evaluations);
    }
    finish(grid, vec![sigma], residuals, evaluations, warnings, vec![obs.index])
}

/// Sequential collocation through the semilinear solver. `σ(0)` solves the
/// compatibility condition `∂_t g − Δh = F(x₀, 0, σ, h)` at `x₀`.
pub fn reconstruct_semilinear(
    data: &ProblemData,
    rhs: &NonlinearRHS,
    measured: &MeasuredData,
    grid: &GridIndex,
    config: &ReconstructionConfig,
) -> Result<Reconstruction> {
    config.validate()?;
    let m = measured.aligned(grid)?;
    let obs = &observations(&m, grid)[0];
    let mut warnings = Vec::new();
    let h0 = (data.h)(&obs.x);
    let sigma0 = super::initial_coefficient(data, Some(rhs), &obs.x)?;

    let stepper = Stepper::new(grid, data, &unchecked())?;
    let dt = grid.dt();
    let mut u = stepper.initial_level();
    let mut prev_trace = outward_derivative(grid, &u, &obs.point);
    let mut sigma = vec![sigma0];
    let mut residuals = vec![0.0];
    let mut evaluations = vec![0];
    let mut infimum = rhs.d_sigma(&obs.x, 0.0, sigma0, h0).abs();
    for n in 1..grid.n_times() {
        let (t0, t1) = (grid.times[n - 1], grid.times[n]);
        let target = measured_quotient(&m, obs.index, n, dt);
        let prev = sigma[n - 1];
        let residual = |s: f64| -> Result<f64> {
            let v = stepper.step_semilinear(rhs, &u, t0, t1, prev, s, n)?;
            Ok((outward_derivative(grid, &v, &obs.point) - prev_trace) / dt - target)
        };
        let root = bracketed_secant(residual, prev, 1e-3 * (1.0 + prev.abs()), config.rootfind_tol, t1)?;
        u = stepper.step_semilinear(rhs, &u, t0, t1, prev, root.x, n)?;
        prev_trace = outward_derivative(grid, &u, &obs.point);
        let g = rhs.d_sigma(&obs.x, t1, root.x, (data.g)(&obs.x, t1));
        if g.abs() < config.delta_floor {
            clamp_divisor(g, config.delta_floor, "|∂σF| at x0", t1, &mut warnings);
        }
        infimum = infimum.min(g.abs());
        sigma.push(root.x);
        residuals.push(root.residual.abs());
        evaluations.push(root.evaluations);
    }
    let mut out = finish(grid, vec![sigma], residuals, evaluations, warnings, vec![obs.index])?;
    out.sensitivity_infimum = Some(infimum);
    Ok(out)
}

/// `G(x, t) = ∫₀¹ ∂_σ F(x, t, σ₂ + s(σ₁ − σ₂), u₂(x, t)) ds` on the grid,
/// by 8-point Gauss–Legendre in `s`.
pub fn sensitivity_kernel(
    rhs: &NonlinearRHS,
    grid: &GridIndex,
    u2: &GridFunction,
    sigma1: &CoefficientPath,
    sigma2: &CoefficientPath,
) -> Result<GridFunction> {
    if u2.n_times() != grid.n_times() || sigma1.len() != grid.n_times() || sigma2.len() != grid.n_times() {
        return Err(Error::InvalidInput("solution and paths must match the grid".into()));
    }
    let mut values = Vec::with_capacity(grid.n_nodes() * grid.n_times());
    for k in 0..grid.n_times() {
        let (s1, s2) = (sigma1.values()[k], sigma2.values()[k]);
        let t = grid.times[k];
        for node in 0..grid.n_nodes() {
            let x = grid.coords(node);
            let u = u2.get(node, k);
            values.push(quadrature::integrate(0.0, 1.0, 8, |s| {
                rhs.d_sigma(x, t, s2 + s * (s1 - s2), u)
            }));
        }
    }
    GridFunction::from_values(grid, values)
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let (lo, hi) = sv
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Joint recovery of `σ₁ … σ_p` in `∂_t u − Δu + Σ_k σ_k(t) f_k(x) u = 0`
/// from `p` observation points, by Newton's method with a forward-difference
/// Jacobian at each step. `data.f` is ignored.
pub fn reconstruct_multi(
    data: &ProblemData,
    fs: &[SpaceFn],
    measured: &MeasuredData,
    grid: &GridIndex,
    config: &ReconstructionConfig,
) -> Result<Reconstruction> {
    config.validate()?;
    let p = fs.len();
    if p == 0 || measured.points.len() != p {
        return Err(Error::InvalidInput(format!(
            "{p} coefficients need {p} observation points, got {}",
            measured.points.len()
        )));
    }
    let m = measured.aligned(grid)?;
    let obs = observations(&m, grid);
    let matrix =
        |boundary: &dyn Fn(&[f64]) -> f64| DMatrix::from_fn(p, p, |l, k| fs[k](&obs[l].x) * boundary(&obs[l].x));
    for &t in &grid.times {
        let cond = condition_number(&matrix(&|x| (data.g)(x, t)));
        if !(cond * config.delta_floor < 1.0) {
            return Err(Error::IllConditioned { t, condition: cond });
        }
    }
    let rhs0 = DVector::from_fn(p, |l, _| data.h_laplacian(&obs[l].x) - data.g_dt(&obs[l].x, 0.0));
    let sigma0 = matrix(&|x| (data.h)(x))
        .lu()
        .solve(&rhs0)
        .ok_or_else(|| Error::LinearSolve("singular compatibility system at t = 0".into()))?;

    let stepper = Stepper::new(grid, data, &unchecked())?;
    let f_nodes: Vec<Vec<f64>> = fs
        .iter()
        .map(|f| (0..grid.n_nodes()).map(|n| f(grid.coords(n))).collect())
        .collect();
    let dt = grid.dt();
    let mut u = stepper.initial_level();
    let traces =
        |level: &[f64]| -> Vec<f64> { obs.iter().map(|o| outward_derivative(grid, level, &o.point)).collect() };
    let mut prev_trace = traces(&u);
    let mut paths: Vec<Vec<f64>> = sigma0.iter().map(|&s| vec![s]).collect();
    let mut residuals = vec![0.0];
    let mut evaluations = vec![0];
    for n in 1..grid.n_times() {
        let (t0, t1) = (grid.times[n - 1], grid.times[n]);
        let prev: Vec<f64> = paths.iter().map(|v| v[n - 1]).collect();
        let target: Vec<f64> = obs.iter().map(|o| measured_quotient(&m, o.index, n, dt)).collect();
        let mut count = 0;
        let advance = |s: &[f64], count: &mut usize| -> Result<(Vec<f64>, Vec<f64>)> {
            *count += 1;
            let mids: Vec<f64> = prev.iter().zip(s).map(|(a, b)| 0.5 * (a + b)).collect();
            let v = stepper.step_coefficient(&u, t0, t1, &combine(&f_nodes, &mids))?;
            let r = traces(&v)
                .iter()
                .zip(&prev_trace)
                .zip(&target)
                .map(|((a, b), c)| (a - b) / dt - c)
                .collect();
            Ok((v, r))
        };
        let mut s = prev.clone();
        let mut solved = None;
        for _ in 0..30 {
            let (_, r) = advance(&s, &mut count)?;
            let mut jac = DMatrix::zeros(p, p);
            for k in 0..p {
                let delta = 1e-6 * (1.0 + s[k].abs());
                let mut sp = s.clone();
                sp[k] += delta;
                let (_, rp) = advance(&sp, &mut count)?;
                for l in 0..p {
                    jac[(l, k)] = (rp[l] - r[l]) / delta;
                }
            }
            let step = jac
                .lu()
                .solve(&DVector::from_iterator(p, r.iter().map(|v| -v)))
                .ok_or_else(|| Error::RootFind {
                    t: t1,
                    detail: "singular Jacobian".into(),
                })?;
            let mut size = 0.0f64;
            for k in 0..p {
                s[k] += step[k];
                size = size.max(step[k].abs());
            }
            let scale = s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !size.is_finite() {
                break;
            }
            if size <= config.rootfind_tol * (1.0 + scale) {
                solved = Some(advance(&s, &mut count)?);
                break;
            }
        }
        let (v, r) = solved.ok_or_else(|| Error::RootFind {
            t: t1,
            detail: "Newton iteration did not converge in 30 iterations".into(),
        })?;
        u = v;
        prev_trace = traces(&u);
        for (path, &sk) in paths.iter_mut().zip(&s) {
            path.push(sk);
        }
        residuals.push(r.iter().fold(0.0, |a: f64, v| a.max(v.abs())));
        evaluations.push(count);
    }
    let points = obs.iter().map(|o| o.index).collect();
    finish(grid, paths, residuals, evaluations, Vec::new(), points)
}
