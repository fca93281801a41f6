use crate::config::{ExperimentConfig, MethodName};
use crate::expr::{laplacian, point, Expr, VARS};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use timecoef::forward::*;
use timecoef::heat_kernel::*;
use timecoef::inverse::*;
use timecoef::stability::{emit_plots, max_ratio_spread, refinement_study};
use timecoef::*;

const SPACE: &[&str] = &["x", "y"];
const SPACE_TIME: &[&str] = &["x", "y", "t"];
const TIME: &[&str] = &["t"];

/// Variables allowed in a field on a domain of dimension `dim`.
fn vars(dim: usize, all: &[&'static str]) -> Vec<&'static str> {
    all.iter().copied().filter(|v| dim == 2 || *v != "y").collect()
}

fn parse(key: &str, text: &str, dim: usize, all: &[&'static str]) -> Result<Expr> {
    Expr::parse(key, text, &vars(dim, all))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f =
        File::create(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(BufWriter::new(f))
}

fn write_summary<K: AsRef<str>>(out: &Path, lines: &[(K, String)]) -> Result<()> {
    let mut w = create(&out.join("summary.txt"))?;
    for (k, v) in lines {
        let k = k.as_ref();
        writeln!(w, "{k} = {v}")?;
        println!("{k} = {v}");
    }
    w.flush()?;
    Ok(())
}

/// Creates the output directory and echoes the resolved config into it.
fn prepare(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    Ok(())
}

struct Setup {
    data: ProblemData,
    rhs: Option<NonlinearRHS>,
    grid: GridIndex,
}

fn rhs_derivative(e: &Expr, var: &str, slot: usize) -> RhsFn {
    match e.partial(var) {
        Some(d) => Arc::new(move |x, t, s, u| d.eval(&point(x, t, s, u))),
        None => {
            let e = e.clone();
            Arc::new(move |x, t, s, u| {
                let mut p = point(x, t, s, u);
                let step = 1e-6 * (1.0 + p[slot].abs());
                p[slot] += step;
                let a = e.eval(&p);
                p[slot] -= 2.0 * step;
                (a - e.eval(&p)) / (2.0 * step)
            })
        }
    }
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup> {
    let domain = cfg.domain()?;
    let dim = domain.dimension();
    let p = &cfg.problem;
    let f = parse("problem.f", &p.f, dim, SPACE)?;
    let g = parse("problem.g", &p.g, dim, SPACE_TIME)?;
    let h = parse("problem.h", &p.h, dim, SPACE)?;
    let mut data = ProblemData::from_parts(domain, f.space(), g.space_time(), h.space(), cfg.grid.final_time)?;
    if let Some(d) = g.partial("t") {
        data = data.with_g_dt(move |x, t| d.eval(&point(x, t, 0.0, 0.0)));
    }
    if let Some(lap) = laplacian(&h, dim) {
        data = data.with_h_laplacian(move |x| lap(x));
    }
    let rhs = match &p.rhs {
        None => None,
        Some(text) => {
            let e = parse("problem.rhs", text, dim, &VARS)?;
            let fe = e.clone();
            let mut r = NonlinearRHS::from_parts(
                Arc::new(move |x, t, s, u| fe.eval(&point(x, t, s, u))),
                rhs_derivative(&e, "sigma", 3),
                rhs_derivative(&e, "u", 4),
            );
            if let Some([c, d]) = p.growth {
                r = r.with_growth(c, d);
            }
            Some(r)
        }
    };
    let grid = build_grid(domain, cfg.grid_spec())?;
    Ok(Setup { data, rhs, grid })
}

fn observation_point(cfg: &ExperimentConfig, s: &Setup) -> Result<usize> {
    match cfg.problem.x0 {
        Some(i) if i >= s.grid.boundary.len() => Err(Error::InvalidInput(format!(
            "problem.x0 = {i} is out of range ({} boundary points)",
            s.grid.boundary.len()
        ))),
        Some(i) => Ok(i),
        None => Ok(choose_x0(&s.data, &s.grid)),
    }
}

fn x0_coords(s: &Setup, x0: usize) -> Vec<f64> {
    s.grid.coords(s.grid.boundary[x0].node).to_vec()
}

fn true_sigma(cfg: &ExperimentConfig, grid: &GridIndex) -> Result<Option<CoefficientPath>> {
    cfg.problem
        .sigma
        .as_ref()
        .map(|text| CoefficientPath::from_fn(&grid.times, Expr::parse("problem.sigma", text, TIME)?.time()))
        .transpose()
}

pub fn forward(cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    prepare(cfg, out)?;
    let s = setup(cfg)?;
    let sigma = true_sigma(cfg, &s.grid)?.map_or_else(|| CoefficientPath::constant(&s.grid.times, 0.0), Ok)?;
    let requested = cfg.reconstruction.is_some();
    let x0 = if requested {
        Some(observation_point(cfg, &s)?)
    } else {
        None
    };
    let opts = SolveOptions::default();
    if let (Some(i), None) = (x0, &s.rhs) {
        validate_h1_h2(&s.data, sigma.values()[0], &x0_coords(&s, i), opts.compatibility_tol).check()?;
    }
    let u = match &s.rhs {
        None => solve_linear(&s.data, &sigma, &s.grid, &opts)?,
        Some(r) => solve_semilinear(&s.data, &sigma, r, &s.grid, &opts)?,
    };
    let monitor = solution_monitor(&u, &s.grid);
    if let (Some(i), Some(r)) = (x0, &s.rhs) {
        let u_max = monitor.max.abs().max(monitor.min.abs());
        validate_h3_h6(
            &s.data,
            r,
            sigma.values()[0],
            sigma.c1_norm(),
            &x0_coords(&s, i),
            u_max,
            opts.compatibility_tol,
        )
        .check()?;
    }
    let record = neumann_trace(&u, &s.grid)?;
    let mut w = create(&out.join("solution.csv"))?;
    u.write_csv(&s.grid, &mut w)?;
    w.flush()?;
    let mut w = create(&out.join("neumann.csv"))?;
    record.write_csv(&mut w)?;
    w.flush()?;
    let mut lines = vec![
        (
            "solver",
            if s.rhs.is_some() { "semilinear" } else { "linear" }.to_string(),
        ),
        ("nodes", s.grid.n_nodes().to_string()),
        ("time_levels", s.grid.n_times().to_string()),
        ("u_min", fmt_f64(monitor.min)),
        ("u_max", fmt_f64(monitor.max)),
        ("max_gradient", fmt_f64(monitor.max_gradient)),
    ];
    if let Some(i) = x0 {
        lines.push(("x0", i.to_string()));
    }
    write_summary(out, &lines)?;
    Ok(true)
}

fn coefficient_from(e: &Expr, sign: f64, f: Option<SpaceFn>) -> ZeroOrderCoefficient {
    // q = sign · e(x, t) · f(x)
    let factor = f.clone();
    let scale = move |x: &[f64]| sign * factor.as_ref().map_or(1.0, |f| f(x));
    match (e.constant(), &f) {
        (Some(c), None) => ZeroOrderCoefficient::constant(sign * c),
        (Some(0.0), Some(_)) => ZeroOrderCoefficient::zero(),
        _ if !e.uses("t") => {
            let e = e.clone();
            ZeroOrderCoefficient::stationary(move |x| e.eval(&point(x, 0.0, 0.0, 0.0)) * scale(x))
        }
        _ => {
            let (e2, s2) = (e.clone(), scale.clone());
            let q = ZeroOrderCoefficient::space_time(move |x, t| e2.eval(&point(x, t, 0.0, 0.0)) * s2(x));
            match e.partial("t") {
                Some(d) => q.with_time_derivative(move |x, t| d.eval(&point(x, t, 0.0, 0.0)) * scale(x)),
                None => q,
            }
        }
    }
}

fn check_row(w: &mut csv::Writer<BufWriter<File>>, name: &str, value: f64, tol: f64, pass: bool) -> Result<()> {
    w.write_record([
        name,
        &fmt_f64(value),
        &fmt_f64(tol),
        if pass { "true" } else { "false" },
    ])?;
    println!(
        "{name}: {} (value {value:.3e}, tolerance {tol:.1e})",
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(())
}

pub fn kernel_verify(cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    prepare(cfg, out)?;
    let domain = cfg.domain()?;
    let q_expr = parse("kernel.q", &cfg.kernel.q, domain.dimension(), SPACE_TIME)?;
    let q = coefficient_from(&q_expr, 1.0, None);
    let pcfg = cfg.parametrix();
    let ev = build_fundamental_solution(q, &domain, &pcfg)?;
    let horizon = pcfg.time_horizon;
    let lengths = domain.lengths();
    let fractions = [0.0, 0.3, 0.5, 0.8, 1.0];
    let points: Vec<Vec<f64>> = if lengths.len() == 1 {
        fractions.iter().map(|a| vec![a * lengths[0]]).collect()
    } else {
        fractions
            .iter()
            .map(|a| vec![a * lengths[0], (1.0 - a) * lengths[1]])
            .collect()
    };
    let mut w = csv::Writer::from_writer(create(&out.join("kernel_checks.csv"))?);
    w.write_record(["check", "value", "tolerance", "pass"])?;
    let mut all = true;

    let residual = ev.diagnostics().residual.as_ref().map_or(0.0, |r| r.max_extrapolated);
    let ok = residual <= pcfg.residual_tol;
    check_row(&mut w, "pde_residual", residual, pcfg.residual_tol, ok)?;
    all &= ok;

    let elapsed: Vec<f64> = (0..12).map(|k| horizon * 1e-3 * 1e3f64.powf(k as f64 / 11.0)).collect();
    if ev.coefficient().is_zero() {
        let err = normalization_error(&ev, &points, &elapsed, 0.0);
        let ok = err < 1e-6;
        check_row(&mut w, "normalization", err, 1e-6, ok)?;
        all &= ok;
    }

    let samples: Vec<(Vec<f64>, f64, f64)> = points
        .iter()
        .flat_map(|x| elapsed.iter().map(move |&e| (x.clone(), e, 0.0)))
        .collect();
    let mass = verify_mass_bound(&ev, &samples);
    if let Some(c) = ev.coefficient().constant_value() {
        let err = mass
            .samples
            .iter()
            .map(|m| (m.mass - (c * (m.t - m.s)).exp()).abs() / (c * (m.t - m.s)).exp())
            .fold(0.0, f64::max);
        let ok = err < 1e-5;
        check_row(&mut w, "mass_exponential", err, 1e-5, ok)?;
        all &= ok;
    } else {
        // Mass of |U| grows no faster than e^{sup|q| (t − s)}.
        let bound = ev.coefficient().sup_estimate(&domain, horizon);
        let excess = (mass.growth_rate - bound).max(0.0);
        let ok = excess <= 1e-6 * (1.0 + bound);
        check_row(&mut w, "mass_growth", mass.growth_rate, bound, ok)?;
        all &= ok;
    }

    if ev.coefficient().is_time_independent() {
        let h = horizon;
        let triples: Vec<_> = points
            .iter()
            .zip(points.iter().rev())
            .enumerate()
            .map(|(i, (x, y))| {
                let s = 0.05 * h * i as f64;
                (
                    x.clone(),
                    s + (0.4 + 0.1 * i as f64) * h,
                    s + (0.15 + 0.05 * i as f64) * h,
                    s,
                    y.clone(),
                )
            })
            .collect();
        let err = chapman_kolmogorov_error(&ev, &triples);
        let ok = err < 1e-4;
        check_row(&mut w, "chapman_kolmogorov", err, 1e-4, ok)?;
        all &= ok;
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = points.iter().cloned().zip(points.iter().rev().cloned()).collect();
        let err = symmetry_error(&ev, &pairs, 0.7 * h, 0.1 * h);
        let ok = err < 1e-4;
        check_row(&mut w, "symmetry", err, 1e-4, ok)?;
        all &= ok;
    }
    w.flush()?;
    write_kernel_dump(&ev, &points, &elapsed, &out.join("kernel_dump.csv"))?;
    Ok(all)
}

/// `U(x, e; y, 0)` on every point pair and elapsed time.
fn write_kernel_dump(ev: &KernelEvaluator, points: &[Vec<f64>], elapsed: &[f64], path: &Path) -> Result<()> {
    let dim = points.first().map_or(1, Vec::len);
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header: Vec<String> = Vec::new();
    for side in ["x", "y"] {
        if dim == 1 {
            header.push(side.into());
        } else {
            header.extend((1..=dim).map(|k| format!("{side}{k}")));
        }
    }
    header.extend(["t_minus_s".into(), "U".into()]);
    w.write_record(&header)?;
    for x in points {
        for y in points {
            for &e in elapsed {
                let u = ev.eval(x, e, y, 0.0)?;
                let row: Vec<String> = x.iter().chain(y).chain([&e, &u]).map(|v| fmt_f64(*v)).collect();
                w.write_record(&row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn volterra(
    cfg: &ExperimentConfig,
    s: &Setup,
    m: &MeasuredData,
    x0: usize,
    rc: &ReconstructionConfig,
) -> Result<Reconstruction> {
    if s.rhs.is_some() {
        return Err(Error::InvalidInput(
            "reconstruction.method = volterra_fixed_point supports the linear problem only".into(),
        ));
    }
    let r = cfg.reconstruction();
    let reference = match &r.reference {
        Some(text) => Expr::parse("reconstruction.reference", text, TIME)?,
        None => {
            let c = initial_coefficient(&s.data, None, &x0_coords(s, x0))?;
            Expr::parse("reconstruction.reference", &format!("({c})"), TIME)?
        }
    };
    let path = CoefficientPath::from_fn(&s.grid.times, reference.time())?;
    let q = coefficient_from(&reference, -1.0, Some(s.data.f.clone()));
    let ev = build_fundamental_solution(q, &s.data.domain, &cfg.parametrix())?;
    let opts = VolterraOptions {
        cell_nodes: r.cell_nodes,
        ..Default::default()
    };
    reconstruct_volterra(&s.data, m, &path, &ev, &s.grid, rc, &opts)
}

pub fn reconstruct(cfg: &ExperimentConfig, measured: Option<&Path>, out: &Path) -> Result<bool> {
    let r = cfg.reconstruction();
    let source = match (measured, &r.measured) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.into(),
        (None, None) => {
            return Err(Error::InvalidInput(
                "no measured data: pass --measured or set reconstruction.measured".into(),
            ))
        }
    };
    prepare(cfg, out)?;
    let s = setup(cfg)?;
    let file = File::open(&source)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", source.display()))))?;
    let record = NeumannRecord::read_csv(&s.grid, std::io::BufReader::new(file))?;
    let x0 = observation_point(cfg, &s)?;
    let mut m = MeasuredData::new(record, vec![x0])?;
    if r.noise > 0.0 {
        m = add_noise(&m, r.noise, r.seed)?;
    }
    let rc = cfg.reconstruction_config();
    let sequential = match &s.rhs {
        None => reconstruct_sequential(&s.data, &m, &s.grid, &rc)?,
        Some(rhs) => reconstruct_semilinear(&s.data, rhs, &m, &s.grid, &rc)?,
    };
    let (result, cross) = match r.method {
        MethodName::SequentialCollocation => (sequential, None),
        MethodName::VolterraFixedPoint => {
            let v = volterra(cfg, &s, &m, x0, &rc)?;
            let diff = v.path().sup_diff(sequential.path())?;
            (v, Some(diff))
        }
    };
    let truth = true_sigma(cfg, &s.grid)?;
    let mut w = create(&out.join("sigma.csv"))?;
    result.path().write_csv(truth.as_ref(), &mut w)?;
    w.flush()?;
    let mut w = create(&out.join("history.csv"))?;
    result.write_history_csv(&mut w)?;
    w.flush()?;
    if !result.picard_history.is_empty() {
        let mut w = create(&out.join("picard.csv"))?;
        result.write_picard_csv(&mut w)?;
        w.flush()?;
    }
    let mut lines = vec![
        (
            "method",
            match r.method {
                MethodName::SequentialCollocation => "sequential_collocation",
                MethodName::VolterraFixedPoint => "volterra_fixed_point",
            }
            .to_string(),
        ),
        ("x0", x0.to_string()),
        ("noise", fmt_f64(m.noise_level)),
        ("seed", r.seed.to_string()),
        (
            "max_residual",
            fmt_f64(result.residuals.iter().fold(0.0, |a, b| a.max(b.abs()))),
        ),
        ("warnings", result.warnings.len().to_string()),
    ];
    if let Some(t) = &truth {
        lines.push(("sup_error", fmt_f64(result.path().sup_diff(t)?)));
    }
    if let Some(d) = cross {
        lines.push(("cross_method_diff", fmt_f64(d)));
    }
    if let Some(inf) = result.sensitivity_infimum {
        lines.push(("sensitivity_infimum", fmt_f64(inf)));
    }
    write_summary(out, &lines)?;
    for warning in &result.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(true)
}

pub fn stability_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    prepare(cfg, out)?;
    let s = setup(cfg)?;
    let plan = cfg.plan();
    let reports = refinement_study(&plan, &s.data, s.rhs.as_ref())?;
    let mut lines = vec![
        ("family".to_string(), plan.family.clone()),
        ("seed".into(), plan.seed.to_string()),
    ];
    for (i, r) in reports.iter().enumerate() {
        let dir = out.join(format!("level{i}"));
        fs::create_dir_all(&dir)?;
        let mut w = create(&dir.join("stability.csv"))?;
        r.write_csv(&mut w)?;
        w.flush()?;
        let mut w = create(&dir.join("summary.txt"))?;
        r.write_summary(&mut w)?;
        w.flush()?;
        emit_plots(r, &dir)?;
        lines.push((format!("level{i}_grid"), format!("{}x{}", r.grid.nx, r.grid.nt)));
        lines.push((
            format!("level{i}_max_ratio"),
            r.max_ratio.map_or_else(String::new, fmt_f64),
        ));
        lines.push((format!("level{i}_slope"), r.slope.map_or_else(String::new, fmt_f64)));
    }
    lines.push((
        "max_ratio_spread".into(),
        max_ratio_spread(&reports).map_or_else(String::new, fmt_f64),
    ));
    write_summary(out, &lines)?;
    Ok(true)
}
