mod common;

use common::*;
use std::sync::Arc;
use timecoef::forward::*;
use timecoef::*;

// u = e^{−t} cos 2x + x t
fn exact(x: f64, t: f64) -> f64 {
    (-t).exp() * (2.0 * x).cos() + x * t
}

fn exact_t(x: f64, t: f64) -> f64 {
    -(-t).exp() * (2.0 * x).cos() + x
}

fn exact_xx(x: f64, t: f64) -> f64 {
    -4.0 * (-t).exp() * (2.0 * x).cos()
}

fn manufactured_data() -> ProblemData {
    ProblemData::new(
        interval(),
        |x| 1.0 + x[0],
        |x, t| exact(x[0], t),
        |x| exact(x[0], 0.0),
        1.0,
    )
    .unwrap()
    .with_g_dt(|x, t| exact_t(x[0], t))
    .with_h_laplacian(|x| exact_xx(x[0], 0.0))
}

fn error(u: &GridFunction, grid: &GridIndex) -> f64 {
    let mut worst = 0.0f64;
    for (k, &t) in grid.times.iter().enumerate() {
        for n in 0..grid.n_nodes() {
            worst = worst.max((u.get(n, k) - exact(grid.coords(n)[0], t)).abs());
        }
    }
    worst
}

fn linear_error(nx: usize, nt: usize) -> f64 {
    let data = manufactured_data();
    let g = grid(nx, nt);
    let sigma = CoefficientPath::from_fn(&g.times, sigma_star).unwrap();
    let source: SpaceTimeFn =
        Arc::new(|x, t| exact_t(x[0], t) - exact_xx(x[0], t) + sigma_star(t) * (1.0 + x[0]) * exact(x[0], t));
    let opts = SolveOptions {
        source: Some(source),
        ..Default::default()
    };
    error(&solve_linear(&data, &sigma, &g, &opts).unwrap(), &g)
}

fn semilinear_error(nx: usize, nt: usize) -> f64 {
    let data = manufactured_data();
    let g = grid(nx, nt);
    let rhs = semilinear_rhs();
    let sigma = CoefficientPath::from_fn(&g.times, semilinear_sigma).unwrap();
    let r2 = rhs.clone();
    let source: SpaceTimeFn = Arc::new(move |x, t| {
        let u = exact(x[0], t);
        exact_t(x[0], t) - exact_xx(x[0], t) - r2.eval(x, t, semilinear_sigma(t), u)
    });
    let opts = SolveOptions {
        source: Some(source),
        ..Default::default()
    };
    error(&solve_semilinear(&data, &sigma, &rhs, &g, &opts).unwrap(), &g)
}

#[test]
fn linear_second_order_in_space_and_time() {
    let space: Vec<f64> = [11, 21, 41].iter().map(|&nx| linear_error(nx, 4000)).collect();
    let time: Vec<f64> = [10, 20, 40].iter().map(|&nt| linear_error(2001, nt)).collect();
    for o in orders(&space).into_iter().chain(orders(&time)) {
        assert!(o >= 1.9, "orders {:?} {:?}", orders(&space), orders(&time));
    }
}

#[test]
fn semilinear_second_order_in_space_and_time() {
    let space: Vec<f64> = [11, 21, 41].iter().map(|&nx| semilinear_error(nx, 4000)).collect();
    let time: Vec<f64> = [10, 20, 40].iter().map(|&nt| semilinear_error(2001, nt)).collect();
    for o in orders(&space).into_iter().chain(orders(&time)) {
        assert!(o >= 1.9, "orders {:?} {:?}", orders(&space), orders(&time));
    }
}

#[test]
fn linear_rhs_reproduces_linear_solver() {
    let data = linear_problem();
    let g = grid(21, 20);
    let sigma = CoefficientPath::from_fn(&g.times, sigma_star).unwrap();
    let a = solve_linear(&data, &sigma, &g, &SolveOptions::default()).unwrap();
    let b = solve_semilinear(
        &data,
        &sigma,
        &NonlinearRHS::linear(data.f.clone()),
        &g,
        &SolveOptions::default(),
    )
    .unwrap();
    assert!(a.max_abs_diff(&b) < 1e-10);
}

#[test]
fn constant_state_is_preserved() {
    // u ≡ 1 solves the heat equation with σ ≡ 0.
    let data = ProblemData::new(interval(), |_| 1.0, |_, _| 1.0, |_| 1.0, 1.0).unwrap();
    let g = grid(11, 10);
    let sigma = CoefficientPath::constant(&g.times, 0.0).unwrap();
    let u = solve_linear(&data, &sigma, &g, &SolveOptions::default()).unwrap();
    assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
    let rec = neumann_trace(&u, &g).unwrap();
    assert!(rec.dt_dnu.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn incompatible_data_names_h1() {
    let data = linear_problem();
    let g = grid(11, 10);
    let sigma = CoefficientPath::constant(&g.times, 0.0).unwrap();
    let e = solve_linear(&data, &sigma, &g, &SolveOptions::default()).unwrap_err();
    assert!(e.to_string().contains("H1"), "{e}");
}

#[test]
fn explicit_part_bound_is_a_precondition() {
    let data = ProblemData::new(interval(), |_| 1.0, |_, _| 0.0, |_| 0.0, 1.0).unwrap();
    let g = grid(11, 2);
    let sigma = CoefficientPath::constant(&g.times, -10.0).unwrap();
    let e = solve_linear(&data, &sigma, &g, &SolveOptions::default()).unwrap_err();
    assert_eq!(e.category(), ErrorCategory::Validation);
}

#[test]
fn neumann_record_round_trips_through_csv() {
    let data = linear_problem();
    let g = grid(11, 10);
    let sigma = CoefficientPath::from_fn(&g.times, sigma_star).unwrap();
    let u = solve_linear(&data, &sigma, &g, &SolveOptions::default()).unwrap();
    let rec = neumann_trace(&u, &g).unwrap();
    let mut buf = Vec::new();
    rec.write_csv(&mut buf).unwrap();
    let back = NeumannRecord::read_csv(&g, buf.as_slice()).unwrap();
    assert_eq!(back.dnu, rec.dnu);
    assert_eq!(back.dt_dnu, rec.dt_dnu);
}

#[test]
fn rectangle_solution_converges() {
    // u = e^{−2π²t} cos πx cos πy is a heat solution with zero coefficient.
    use std::f64::consts::PI;
    let d = DomainSpec::rectangle(1.0, 1.0).unwrap();
    let ex = |x: &[f64], t: f64| (-2.0 * PI * PI * t).exp() * (PI * x[0]).cos() * (PI * x[1]).cos();
    let data = ProblemData::new(d, |_| 1.0, ex, move |x| ex(x, 0.0), 0.1).unwrap();
    let mut errs = Vec::new();
    for n in [11, 21] {
        let g = build_grid(d, GridSpec::rectangle(n, n, 4 * (n - 1), 0.1)).unwrap();
        let sigma = CoefficientPath::constant(&g.times, 0.0).unwrap();
        let u = solve_linear(&data, &sigma, &g, &SolveOptions::default()).unwrap();
        let k = g.n_times() - 1;
        errs.push(
            (0..g.n_nodes())
                .map(|n| (u.get(n, k) - ex(g.coords(n), 0.1)).abs())
                .fold(0.0, f64::max),
        );
    }
    assert!(orders(&errs)[0] > 1.8, "{errs:?}");
}
