//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

mod common;

use common::*;
use std::sync::Arc;
use std::time::Instant;
use timecoef::forward::*;
use timecoef::heat_kernel::*;
use timecoef::inverse::*;
use timecoef::potentials::PotentialQuadrature;
use timecoef::stability::*;
use timecoef::*;

type Outcome = Result<(bool, String)>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn rootfind_tol() -> f64 {
    ReconstructionConfig::default().rootfind_tol
}

fn sup_error(r: &Reconstruction, f: impl Fn(f64) -> f64) -> f64 {
    let p = r.path();
    p.times()
        .iter()
        .zip(p.values())
        .map(|(&t, v)| (v - f(t)).abs())
        .fold(0.0, f64::max)
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn kernel(q: ZeroOrderCoefficient) -> Result<KernelEvaluator> {
    build_fundamental_solution(q, &interval(), &ParametrixConfig::default())
}

fn kernel_normalization() -> Outcome {
    let start = Instant::now();
    let ev = kernel(ZeroOrderCoefficient::zero())?;
    let points: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 / 10.0]).collect();
    let elapsed: Vec<f64> = (0..30).map(|k| 1e-3 * 1e3f64.powf(k as f64 / 29.0)).collect();
    let err = normalization_error(&ev, &points, &elapsed, 0.0);
    let secs = start.elapsed().as_secs_f64();
    Ok((
        err < 1e-6 && secs < 10.0,
        format!("max |mass − 1| = {err:.3e}, {secs:.1} s"),
    ))
}

fn constant_closed_form() -> Outcome {
    let start = Instant::now();
    let c = -0.7;
    let ev = kernel(ZeroOrderCoefficient::constant(c))?;
    let mut worst = 0.0f64;
    for i in 0..100 {
        let x = (i % 10) as f64 / 9.0;
        let y = ((i * 7) % 11) as f64 / 10.0;
        let e = 0.01 + 0.99 * (i / 10) as f64 / 9.0;
        let u = ev.eval(&[x], e, &[y], 0.0)?;
        let exact = (c * e).exp() * ev.parametrix(&[x], &[y], e);
        worst = worst.max((u - exact).abs() / exact.abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst < 1e-4 && secs < 60.0,
        format!("sup relative error {worst:.3e}, {secs:.1} s"),
    ))
}

fn chapman_kolmogorov() -> Outcome {
    let ev = kernel(ZeroOrderCoefficient::stationary(|x| -(1.0 + x[0])))?;
    let triples = vec![
        (vec![0.2], 0.6, 0.3, 0.0, vec![0.7]),
        (vec![0.0], 0.9, 0.5, 0.1, vec![0.4]),
        (vec![0.5], 1.0, 0.2, 0.0, vec![0.5]),
        (vec![0.9], 0.4, 0.35, 0.05, vec![1.0]),
        (vec![0.33], 0.8, 0.6, 0.2, vec![0.1]),
    ];
    let err = chapman_kolmogorov_error(&ev, &triples);
    Ok((err < 1e-4, format!("composition error {err:.3e}")))
}

fn lemma_report() -> Result<LemmaReport> {
    let ev = kernel(ZeroOrderCoefficient::zero())?;
    let plan = ExperimentPlan {
        seed: 1,
        ..Default::default()
    };
    lemma_bound_suite(&ev, &plan, &PotentialQuadrature::default())
}

fn derivative_identity(r: &LemmaReport) -> Outcome {
    let err = r.max_identity_error();
    Ok((
        r.identity.len() == 10 && err < 1e-3,
        format!("{} samples, max relative error {err:.3e}", r.identity.len()),
    ))
}

fn layer_bound(r: &LemmaReport) -> Outcome {
    let spread = r.max_layer_spread();
    Ok((
        r.layer.len() == 4 && spread < 0.2 && r.zero_holds,
        format!("{} families, max constant spread {:.3e}", r.layer.len(), spread),
    ))
}

// Manufactured solution u = e^{−t} cos 2x + x t.
fn exact(x: f64, t: f64) -> f64 {
    (-t).exp() * (2.0 * x).cos() + x * t
}

fn exact_t(x: f64, t: f64) -> f64 {
    -(-t).exp() * (2.0 * x).cos() + x
}

fn exact_xx(x: f64, t: f64) -> f64 {
    -4.0 * (-t).exp() * (2.0 * x).cos()
}

fn manufactured_error(nx: usize, nt: usize, semilinear: bool) -> Result<f64> {
    let data = ProblemData::new(
        interval(),
        |x| 1.0 + x[0],
        |x, t| exact(x[0], t),
        |x| exact(x[0], 0.0),
        1.0,
    )?
    .with_g_dt(|x, t| exact_t(x[0], t))
    .with_h_laplacian(|x| exact_xx(x[0], 0.0));
    let g = grid(nx, nt);
    let u = if semilinear {
        let rhs = semilinear_rhs();
        let r2 = rhs.clone();
        let source: SpaceTimeFn = Arc::new(move |x, t| {
            exact_t(x[0], t) - exact_xx(x[0], t) - r2.eval(x, t, semilinear_sigma(t), exact(x[0], t))
        });
        let sigma = CoefficientPath::from_fn(&g.times, semilinear_sigma)?;
        let opts = SolveOptions {
            source: Some(source),
            ..Default::default()
        };
        solve_semilinear(&data, &sigma, &rhs, &g, &opts)?
    } else {
        let source: SpaceTimeFn =
            Arc::new(|x, t| exact_t(x[0], t) - exact_xx(x[0], t) + sigma_star(t) * (1.0 + x[0]) * exact(x[0], t));
        let sigma = CoefficientPath::from_fn(&g.times, sigma_star)?;
        let opts = SolveOptions {
            source: Some(source),
            ..Default::default()
        };
        solve_linear(&data, &sigma, &g, &opts)?
    };
    let mut worst = 0.0f64;
    for (k, &t) in g.times.iter().enumerate() {
        for n in 0..g.n_nodes() {
            worst = worst.max((u.get(n, k) - exact(g.coords(n)[0], t)).abs());
        }
    }
    Ok(worst)
}

fn forward_convergence() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, semi) in [("linear", false), ("semilinear", true)] {
        let start = Instant::now();
        let space = [11, 21, 41]
            .iter()
            .map(|&nx| manufactured_error(nx, 4000, semi))
            .collect::<Result<Vec<_>>>()?;
        let time = [10, 20, 40]
            .iter()
            .map(|&nt| manufactured_error(2001, nt, semi))
            .collect::<Result<Vec<_>>>()?;
        let (os, ot) = (orders(&space), orders(&time));
        let lowest = os.iter().chain(&ot).copied().fold(f64::INFINITY, f64::min);
        let secs = start.elapsed().as_secs_f64();
        ok &= lowest >= 1.9 && secs < 60.0;
        detail.push(format!("{name}: h orders {os:.2?}, Δt orders {ot:.2?}, {secs:.1} s"));
    }
    Ok((ok, detail.join("; ")))
}

fn semilinear_measured(g: &GridIndex) -> Result<MeasuredData> {
    let sigma = CoefficientPath::from_fn(&g.times, semilinear_sigma)?;
    let u = solve_semilinear(
        &semilinear_problem(),
        &sigma,
        &semilinear_rhs(),
        g,
        &SolveOptions::default(),
    )?;
    MeasuredData::new(neumann_trace(&u, g)?, vec![1])
}

fn inverse_crime() -> Outcome {
    let tol = 10.0 * rootfind_tol();
    let g = grid(41, 40);
    let start = Instant::now();
    let data = linear_problem();
    let m = measured(&data, &CoefficientPath::from_fn(&g.times, sigma_star)?, &g, vec![1]);
    let lin = sup_error(
        &reconstruct_sequential(&data, &m, &g, &ReconstructionConfig::default())?,
        sigma_star,
    );
    let t_lin = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let semi = reconstruct_semilinear(
        &semilinear_problem(),
        &semilinear_rhs(),
        &semilinear_measured(&g)?,
        &g,
        &ReconstructionConfig::default(),
    )?;
    let semi = sup_error(&semi, semilinear_sigma);
    let t_semi = start.elapsed().as_secs_f64();
    Ok((
        lin < tol && semi < tol && t_lin < 120.0 && t_semi < 120.0,
        format!("linear {lin:.3e} ({t_lin:.2} s), semilinear {semi:.3e} ({t_semi:.2} s)"),
    ))
}

fn lipschitz_shadow() -> Outcome {
    let start = Instant::now();
    let plan = ExperimentPlan {
        seed: 2024,
        ..Default::default()
    };
    let reports = refinement_study(&plan, &stability_problem(), None)?;
    let spread = max_ratio_spread(&reports).unwrap_or(f64::INFINITY);
    let slopes: Vec<f64> = reports.iter().map(|r| r.slope.unwrap_or(f64::NAN)).collect();
    let secs = start.elapsed().as_secs_f64();
    let ok = reports.iter().all(|r| r.pass() && r.pairs.len() == 60) && spread <= 0.3 && secs < 600.0;
    Ok((
        ok,
        format!("slopes {slopes:.4?}, max ratio spread {spread:.3e}, {secs:.1} s"),
    ))
}

fn noise_scaling() -> Outcome {
    let data = linear_problem();
    let g = grid(41, 40);
    let clean = measured(&data, &CoefficientPath::from_fn(&g.times, sigma_star)?, &g, vec![1]);
    let levels = [1e-4, 1e-3, 1e-2];
    let errors = levels
        .iter()
        .map(|&eps| {
            let r = reconstruct_sequential(&data, &add_noise(&clean, eps, 7)?, &g, &ReconstructionConfig::default())?;
            Ok(sup_error(&r, sigma_star))
        })
        .collect::<Result<Vec<f64>>>()?;
    let lx: Vec<f64> = levels.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = errors.iter().map(|v| v.log10()).collect();
    let mx = lx.iter().sum::<f64>() / 3.0;
    let my = ly.iter().sum::<f64>() / 3.0;
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    Ok((
        (0.8..=1.2).contains(&slope),
        format!("errors {}, fitted slope {slope:.4}", sci(&errors)),
    ))
}

fn multi_coefficient() -> Outcome {
    const MB: f64 = -1.0 / 12.0;
    const MA: f64 = MB - 1.0;
    let h = |x: f64| 2.0 - x + x * (1.0 - x) * (MA + MB * x);
    let data = ProblemData::new(interval(), |_| 1.0, |x, t| 2.0 - x[0] + x[0] * t, move |x| h(x[0]), 1.0)?
        .with_g_dt(|x, _| x[0])
        .with_h_laplacian(|x| 2.0 * (MB - MA) - 6.0 * MB * x[0]);
    let fs = vec![space_fn(|_| 1.0), space_fn(|x| x[0])];
    let g = grid(41, 40);
    let truth = |t: f64| [1.0, 0.5 + 0.2 * (2.0 * std::f64::consts::PI * t).sin()];
    let paths = (0..2)
        .map(|k| CoefficientPath::from_fn(&g.times, |t| truth(t)[k]))
        .collect::<Result<Vec<_>>>()?;
    let u = solve_linear_multi(&data, &fs, &paths, &g, &SolveOptions::default())?;
    let m = MeasuredData::new(neumann_trace(&u, &g)?, vec![0, 1])?;
    let r = reconstruct_multi(&data, &fs, &m, &g, &ReconstructionConfig::default())?;
    let err = (0..2)
        .map(|k| r.paths[k].sup_diff(&paths[k]))
        .collect::<Result<Vec<_>>>()?;

    let same = vec![space_fn(|_| 1.0), space_fn(|_| 1.0)];
    let gs = grid(11, 10);
    let flat = (0..2)
        .map(|_| CoefficientPath::constant(&gs.times, 0.75))
        .collect::<Result<Vec<_>>>()?;
    let opts = SolveOptions {
        check_compatibility: false,
        ..Default::default()
    };
    let us = solve_linear_multi(&data, &same, &flat, &gs, &opts)?;
    let ms = MeasuredData::new(neumann_trace(&us, &gs)?, vec![0, 1])?;
    let rejected = matches!(
        reconstruct_multi(&data, &same, &ms, &gs, &ReconstructionConfig::default()),
        Err(Error::IllConditioned { .. })
    );
    let tol = 10.0 * rootfind_tol();
    Ok((
        err.iter().all(|&e| e < tol) && rejected,
        format!("errors {}, equal fields rejected: {rejected}", sci(&err)),
    ))
}

fn gronwall_stability() -> Outcome {
    let data = stability_problem();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
    let pairs: Vec<(TrigPath, TrigPath)> = (0..3)
        .map(|_| {
            let a = sample_in_ball(&mut rng, 0.0, 0.9, 1.0)?;
            Ok((a, a.plus(0.05, &sample_direction(&mut rng, 1.0))))
        })
        .collect::<Result<_>>()?;
    let mut fits = Vec::new();
    for (nx, nt) in [(41, 40), (81, 80)] {
        let g = grid(nx, nt);
        let mut c = 0.0f64;
        for (a, b) in &pairs {
            let s1 = CoefficientPath::from_fn(&g.times, |t| a.eval(t))?;
            let s2 = CoefficientPath::from_fn(&g.times, |t| b.eval(t))?;
            c = c.max(certify_pair(&data, None, &g, &s1, &s2, &ReconstructionConfig::default(), 1.0)?.c_fit);
        }
        fits.push(c);
    }
    let change = (fits[1] / fits[0] - 1.0).abs();
    Ok((
        fits[0] > 0.0 && change <= 0.3,
        format!("C_fit {}, relative change {change:.3e}", sci(&fits)),
    ))
}

fn sweep_bytes(seed: u64) -> Result<Vec<u8>> {
    let plan = ExperimentPlan {
        seed,
        pairs: 5,
        ..Default::default()
    };
    let r = lipschitz_sweep(&plan, &stability_problem(), None, &grid(21, 20))?;
    let mut buf = Vec::new();
    r.write_csv(&mut buf)?;
    r.write_summary(&mut buf)?;
    Ok(buf)
}

fn reconstruction_bytes(seed: u64) -> Result<Vec<u8>> {
    let data = linear_problem();
    let g = grid(21, 20);
    let clean = measured(&data, &CoefficientPath::from_fn(&g.times, sigma_star)?, &g, vec![1]);
    let r = reconstruct_sequential(
        &data,
        &add_noise(&clean, 1e-3, seed)?,
        &g,
        &ReconstructionConfig::default(),
    )?;
    let mut buf = Vec::new();
    r.path().write_csv(None, &mut buf)?;
    r.write_history_csv(&mut buf)?;
    Ok(buf)
}

fn determinism() -> Outcome {
    let sweep = sweep_bytes(42)? == sweep_bytes(42)?;
    let rec = reconstruction_bytes(42)? == reconstruction_bytes(42)?;
    Ok((
        sweep && rec,
        format!("sweep identical: {sweep}, reconstruction identical: {rec}"),
    ))
}

fn with_lemmas(r: &Result<LemmaReport>, check: fn(&LemmaReport) -> Outcome) -> Outcome {
    match r {
        Ok(r) => check(r),
        Err(e) => Ok((false, format!("error: {e}"))),
    }
}

fn main() {
    let lemmas = lemma_report();
    let criteria: Vec<Criterion> = vec![
        ("kernel normalization", Box::new(kernel_normalization)),
        ("constant-q closed form", Box::new(constant_closed_form)),
        ("Chapman-Kolmogorov", Box::new(chapman_kolmogorov)),
        (
            "volume potential derivative identity",
            Box::new(|| with_lemmas(&lemmas, derivative_identity)),
        ),
        (
            "layer potential bound stability",
            Box::new(|| with_lemmas(&lemmas, layer_bound)),
        ),
        ("forward convergence", Box::new(forward_convergence)),
        ("inverse crime", Box::new(inverse_crime)),
        ("Lipschitz shadow", Box::new(lipschitz_shadow)),
        ("noise scaling", Box::new(noise_scaling)),
        ("multi-coefficient", Box::new(multi_coefficient)),
        ("Gronwall certificate", Box::new(gronwall_stability)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += usize::from(!ok);
        println!(
            "criterion {:>2} {name}: {} ({detail})",
            i + 1,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
