#![allow(dead_code)]

use std::f64::consts::PI;
use timecoef::forward::*;
use timecoef::inverse::MeasuredData;
use timecoef::*;

pub fn interval() -> DomainSpec {
    DomainSpec::interval(1.0).unwrap()
}

pub fn grid(nx: usize, nt: usize) -> GridIndex {
    build_grid(interval(), GridSpec::interval(nx, nt, 1.0)).unwrap()
}

pub fn sigma_star(t: f64) -> f64 {
    1.0 + 0.5 * (2.0 * PI * t).sin()
}

// Coefficients of h = 2 + x(x − 1)(a + bx + cx² + dx³), compatible to second
// order with g = 2, f = 1 + x and sigma_star (σ(0) = 1, σ'(0) = π).
const A: f64 = 0.7422315640568341;
const B: f64 = -0.2577684359431659;
const C: f64 = 0.41520366728673586;
const D: f64 = 0.13192357649232256;

fn h_second_order(x: f64) -> f64 {
    2.0 + x * (x - 1.0) * (A + x * (B + x * (C + x * D)))
}

fn h_second_order_laplacian(x: f64) -> f64 {
    // x(x − 1)p(x) = −a x + (a − b)x² + (b − c)x³ + (c − d)x⁴ + d x⁵
    2.0 * (A - B) + 6.0 * (B - C) * x + 12.0 * (C - D) * x * x + 20.0 * D * x.powi(3)
}

/// `f = 1 + x`, `g = 2`, `σ(0) = 1`; `x₀ = 1` is boundary point 1.
pub fn linear_problem() -> ProblemData {
    ProblemData::new(interval(), |x| 1.0 + x[0], |_, _| 2.0, |x| h_second_order(x[0]), 1.0)
        .unwrap()
        .with_g_dt(|_, _| 0.0)
        .with_h_laplacian(|x| h_second_order_laplacian(x[0]))
}

/// Same data with `h` compatible to first order only.
pub fn linear_problem_first_order() -> ProblemData {
    let h = |x: f64| 2.0 + x * (x - 1.0) * (4.0 / 3.0 + x / 3.0);
    ProblemData::new(interval(), |x| 1.0 + x[0], |_, _| 2.0, move |x| h(x[0]), 1.0)
        .unwrap()
        .with_g_dt(|_, _| 0.0)
        .with_h_laplacian(|x| 2.0 + 2.0 * x[0])
}

pub fn semilinear_sigma(t: f64) -> f64 {
    1.0 + 0.25 * (2.0 * PI * t).cos()
}

/// `F = σ(1 + u²/(1 + u²)) f(x)`.
pub fn semilinear_rhs() -> NonlinearRHS {
    let f = |x: &[f64]| 1.0 + x[0];
    NonlinearRHS::new(
        move |x, _, s, u| s * (1.0 + u * u / (1.0 + u * u)) * f(x),
        move |x, _, _, u| (1.0 + u * u / (1.0 + u * u)) * f(x),
        move |x, _, s, u| s * 2.0 * u / (1.0 + u * u).powi(2) * f(x),
    )
}

/// `g = 2`, `h = 2 + x(x − 1)(−1.5 − 0.375x)`, compatible with `σ(0) = 1.25`.
pub fn semilinear_problem() -> ProblemData {
    let h = |x: f64| 2.0 + x * (x - 1.0) * (-1.5 - 0.375 * x);
    ProblemData::new(interval(), |x| 1.0 + x[0], |_, _| 2.0, move |x| h(x[0]), 1.0)
        .unwrap()
        .with_g_dt(|_, _| 0.0)
        .with_h_laplacian(|x| -2.25 - 2.25 * x[0])
}

pub fn measured(data: &ProblemData, sigma: &CoefficientPath, grid: &GridIndex, points: Vec<usize>) -> MeasuredData {
    let u = solve_linear(data, sigma, grid, &SolveOptions::default()).unwrap();
    MeasuredData::new(neumann_trace(&u, grid).unwrap(), points).unwrap()
}

/// Family for stability sweeps: `f ≡ 1`, `g = 1 + t²/2`,
/// `h = 1 + sin(πx)/2`, so `σ(0) = 0`.
pub fn stability_problem() -> ProblemData {
    ProblemData::new(
        interval(),
        |_| 1.0,
        |_, t| 1.0 + 0.5 * t * t,
        |x| 1.0 + 0.5 * (PI * x[0]).sin(),
        1.0,
    )
    .unwrap()
    .with_g_dt(|_, t| t)
    .with_h_laplacian(|x| -0.5 * PI * PI * (PI * x[0]).sin())
}

/// `log₂` of successive error ratios.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
