//! Randomized campaigns probing the Lipschitz dependence of `σ` on the data
//! `∂_t ∂_ν u`, and the bounds on the potentials behind it.

mod lemmas;
mod plots;
mod sampling;

pub use lemmas::{lemma_bound_suite, IdentitySample, LayerFamily, LemmaReport, VolumeSample};
pub use plots::emit_plots;
pub use sampling::{sample_direction, sample_in_ball, TrigPath};

use crate::domain::{GridIndex, GridSpec};
use crate::error::{Error, Result};
use crate::forward::{
    neumann_trace, solve_linear, solve_semilinear, validate_h1_h2, validate_h3_h6, CoefficientPath, NeumannRecord,
    NonlinearRHS, ProblemData, SolveOptions,
};
use crate::inverse::{
    choose_x0, gronwall_certificate, initial_coefficient, reconstruct_semilinear, reconstruct_sequential,
    GronwallReport, MeasuredData, ReconstructionConfig,
};
use crate::{build_grid, fmt_f64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;

/// Accepted slope range of the log-log fit of σ-gap against data gap.
pub const SLOPE_RANGE: (f64, f64) = (0.9, 1.1);

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    /// Label of the problem family, echoed into reports.
    pub family: String,
    /// Radius `M` of the `C¹` ball the coefficients are drawn from.
    pub radius: f64,
    pub pairs: usize,
    /// Perturbation sizes `ε`, positive and strictly decreasing.
    pub amplitudes: Vec<f64>,
    pub grids: Vec<GridSpec>,
    pub seed: u64,
    /// Largest acceptable ratio `σ-gap / data gap`.
    pub c_cap: f64,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        let base = GridSpec::interval(41, 40, 1.0);
        ExperimentPlan {
            family: "default".into(),
            radius: 1.0,
            pairs: 20,
            amplitudes: vec![1e-1, 1e-2, 1e-3],
            grids: vec![base, base.refined()],
            seed: 0,
            c_cap: 1e3,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ball radius must be positive, got {}",
                self.radius
            )));
        }
        if let Some(a) = self.amplitudes.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidInput(format!("amplitudes must be positive, got {a}")));
        }
        if self.amplitudes.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidInput("amplitudes must be strictly decreasing".into()));
        }
        if !(self.c_cap > 0.0) {
            return Err(Error::InvalidInput(format!(
                "c_cap must be positive, got {}",
                self.c_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairResult {
    pub pair_id: usize,
    pub amplitude: f64,
    /// `‖σ₂ − σ₁‖_{L∞(0, T)}` on the grid times.
    pub sigma_gap: f64,
    /// `‖∂_t ∂_ν u₂ − ∂_t ∂_ν u₁‖_{L∞(Σ)}` on the boundary samples.
    pub data_gap: f64,
    /// `None` when the data gap vanishes.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub family: String,
    pub grid: GridSpec,
    pub seed: u64,
    pub c_cap: f64,
    /// Ordered by `pair_id`.
    pub pairs: Vec<PairResult>,
    /// Pairs whose forward solves failed, with the reason.
    pub skipped: Vec<(usize, String)>,
    pub max_ratio: Option<f64>,
    /// Least-squares slope of `ln σ-gap` against `ln data gap`.
    pub slope: Option<f64>,
}

impl StabilityReport {
    fn new(plan: &ExperimentPlan, grid: GridSpec, pairs: Vec<PairResult>, skipped: Vec<(usize, String)>) -> Self {
        let max_ratio = pairs.iter().filter_map(|p| p.ratio).reduce(f64::max);
        let logs: Vec<(f64, f64)> = pairs
            .iter()
            .filter(|p| p.sigma_gap > 0.0 && p.data_gap > 0.0)
            .map(|p| (p.data_gap.ln(), p.sigma_gap.ln()))
            .collect();
        StabilityReport {
            family: plan.family.clone(),
            grid,
            seed: plan.seed,
            c_cap: plan.c_cap,
            pairs,
            skipped,
            max_ratio,
            slope: fit_slope(&logs),
        }
    }

    /// Largest ratio among pairs at the given amplitude.
    pub fn max_ratio_at(&self, amplitude: f64) -> Option<f64> {
        self.pairs
            .iter()
            .filter(|p| p.amplitude == amplitude)
            .filter_map(|p| p.ratio)
            .reduce(f64::max)
    }

    pub fn within_cap(&self) -> bool {
        self.max_ratio.is_none_or(|r| r <= self.c_cap)
    }

    pub fn slope_in_range(&self) -> bool {
        self.slope.is_some_and(|s| (SLOPE_RANGE.0..=SLOPE_RANGE.1).contains(&s))
    }

    pub fn pass(&self) -> bool {
        self.within_cap() && self.slope_in_range()
    }

    /// Columns `pair_id, sigma_gap, data_gap, ratio`; the ratio is empty for
    /// pairs with no data gap.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["pair_id", "sigma_gap", "data_gap", "ratio"])?;
        for p in &self.pairs {
            w.write_record([
                p.pair_id.to_string(),
                fmt_f64(p.sigma_gap),
                fmt_f64(p.data_gap),
                p.ratio.map(fmt_f64).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `key = value` lines.
    pub fn write_summary<W: Write>(&self, mut out: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_else(|| "none".into());
        let g = &self.grid;
        writeln!(out, "family = {}", self.family)?;
        writeln!(out, "max_ratio = {}", opt(self.max_ratio))?;
        writeln!(out, "slope = {}", opt(self.slope))?;
        writeln!(
            out,
            "grid = nx={} ny={} nt={} final_time={}",
            g.nx,
            g.ny,
            g.nt,
            fmt_f64(g.final_time)
        )?;
        writeln!(out, "seed = {}", self.seed)?;
        writeln!(out, "pairs = {}", self.pairs.len())?;
        writeln!(out, "skipped = {}", self.skipped.len())?;
        writeln!(out, "c_cap = {}", fmt_f64(self.c_cap))?;
        writeln!(out, "within_cap = {}", self.within_cap())?;
        writeln!(out, "slope_in_range = {}", self.slope_in_range())?;
        Ok(())
    }
}

fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Solves the forward problem for `sigma` and returns its Neumann record.
fn forward_record(
    problem: &ProblemData,
    rhs: Option<&NonlinearRHS>,
    grid: &GridIndex,
    sigma: &CoefficientPath,
) -> Result<NeumannRecord> {
    let opts = SolveOptions::default();
    let u = match rhs {
        Some(rhs) => solve_semilinear(problem, sigma, rhs, grid, &opts)?,
        None => solve_linear(problem, sigma, grid, &opts)?,
    };
    neumann_trace(&u, grid)
}

/// Both norms of one pair and their ratio.
pub fn evaluate_pair(
    problem: &ProblemData,
    rhs: Option<&NonlinearRHS>,
    grid: &GridIndex,
    sigma1: &CoefficientPath,
    sigma2: &CoefficientPath,
) -> Result<(f64, f64)> {
    let r1 = forward_record(problem, rhs, grid, sigma1)?;
    let r2 = forward_record(problem, rhs, grid, sigma2)?;
    Ok((sigma2.sup_diff(sigma1)?, r2.sup_dt_gap(&r1)?))
}

fn ratio(sigma_gap: f64, data_gap: f64) -> Option<f64> {
    (data_gap > 0.0).then(|| sigma_gap / data_gap)
}

/// For each of `plan.pairs` draws, a base coefficient `σ₁` in the ball of
/// radius `M − max ε` and a unit direction `ρ` vanishing at `t = 0`; each
/// amplitude gives the pair `(σ₁, σ₁ + ερ)`, so both stay in `B(M)` and share
/// `σ(0)` as the compatibility condition requires. Pair ids run over draws
/// first, then amplitudes.
pub fn lipschitz_sweep(
    plan: &ExperimentPlan,
    problem: &ProblemData,
    rhs: Option<&NonlinearRHS>,
    grid: &GridIndex,
) -> Result<StabilityReport> {
    plan.validate()?;
    let x0 = grid.coords(grid.boundary[choose_x0(problem, grid)].node).to_vec();
    let sigma0 = initial_coefficient(problem, rhs, &x0)?;
    let tol = SolveOptions::default().compatibility_tol;
    match rhs {
        Some(rhs) => validate_h3_h6(problem, rhs, sigma0, plan.radius, &x0, 10.0, tol).check()?,
        None => validate_h1_h2(problem, sigma0, &x0, tol).check()?,
    }
    let reach = plan.amplitudes.first().copied().unwrap_or(0.0);
    if !(sigma0.abs() + reach <= plan.radius) {
        return Err(Error::InvalidInput(format!(
            "|σ(0)| = {} plus the largest amplitude {reach} exceeds the ball radius {}",
            sigma0.abs(),
            plan.radius
        )));
    }
    let period = problem.final_time;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let draws: Vec<(TrigPath, TrigPath)> = (0..plan.pairs)
        .map(|_| {
            let base = sample_in_ball(&mut rng, sigma0, plan.radius - reach, period)?;
            Ok((base, sample_direction(&mut rng, period)))
        })
        .collect::<Result<_>>()?;

    let na = plan.amplitudes.len();
    let outcomes: Vec<Vec<std::result::Result<PairResult, (usize, String)>>> = draws
        .par_iter()
        .enumerate()
        .map(|(i, (base, dir))| {
            let ids = move |a: usize| i * na + a;
            let s1 = match CoefficientPath::from_fn(&grid.times, |t| base.eval(t)) {
                Ok(s) => s,
                Err(e) => return (0..na).map(|a| Err((ids(a), e.to_string()))).collect(),
            };
            let r1 = match forward_record(problem, rhs, grid, &s1) {
                Ok(r) => r,
                Err(e) => return (0..na).map(|a| Err((ids(a), e.to_string()))).collect(),
            };
            plan.amplitudes
                .iter()
                .enumerate()
                .map(|(a, &eps)| {
                    let run = || -> Result<PairResult> {
                        let p2 = base.plus(eps, dir);
                        let s2 = CoefficientPath::from_fn(&grid.times, |t| p2.eval(t))?;
                        let r2 = forward_record(problem, rhs, grid, &s2)?;
                        let (sigma_gap, data_gap) = (s2.sup_diff(&s1)?, r2.sup_dt_gap(&r1)?);
                        Ok(PairResult {
                            pair_id: ids(a),
                            amplitude: eps,
                            sigma_gap,
                            data_gap,
                            ratio: ratio(sigma_gap, data_gap),
                        })
                    };
                    run().map_err(|e| (ids(a), e.to_string()))
                })
                .collect()
        })
        .collect();
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes.into_iter().flatten() {
        match o {
            Ok(p) => pairs.push(p),
            Err(s) => skipped.push(s),
        }
    }
    Ok(StabilityReport::new(plan, grid.spec, pairs, skipped))
}

/// [`lipschitz_sweep`] on every grid of the plan's ladder.
pub fn refinement_study(
    plan: &ExperimentPlan,
    problem: &ProblemData,
    rhs: Option<&NonlinearRHS>,
) -> Result<Vec<StabilityReport>> {
    plan.grids
        .iter()
        .map(|spec| {
            let grid = build_grid(problem.domain, *spec)?;
            lipschitz_sweep(plan, problem, rhs, &grid)
        })
        .collect()
}

/// `max/min − 1` over the reports' max ratios; `None` if any is missing.
pub fn max_ratio_spread(reports: &[StabilityReport]) -> Option<f64> {
    let r: Vec<f64> = reports.iter().map(|r| r.max_ratio).collect::<Option<_>>()?;
    let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    (lo > 0.0).then(|| hi / lo - 1.0)
}

/// Reconstructs `σ₁` and `σ₂` from their own simulated data at the point
/// chosen by [`choose_x0`] and checks the difference of the reconstructions
/// against the data gap with constant `c`.
pub fn certify_pair(
    problem: &ProblemData,
    rhs: Option<&NonlinearRHS>,
    grid: &GridIndex,
    sigma1: &CoefficientPath,
    sigma2: &CoefficientPath,
    config: &ReconstructionConfig,
    c: f64,
) -> Result<GronwallReport> {
    let x0 = choose_x0(problem, grid);
    let recover = |sigma: &CoefficientPath| -> Result<(NeumannRecord, CoefficientPath)> {
        let record = forward_record(problem, rhs, grid, sigma)?;
        let m = MeasuredData::new(record.clone(), vec![x0])?;
        let r = match rhs {
            Some(rhs) => reconstruct_semilinear(problem, rhs, &m, grid, config)?,
            None => reconstruct_sequential(problem, &m, grid, config)?,
        };
        Ok((record, r.path().clone()))
    };
    let (r1, p1) = recover(sigma1)?;
    let (r2, p2) = recover(sigma2)?;
    let diff: Vec<f64> = p2.values().iter().zip(p1.values()).map(|(a, b)| a - b).collect();
    let diff = CoefficientPath::new(grid.times.clone(), diff)?;
    gronwall_certificate(&diff, r2.sup_dt_gap(&r1)?, c)
}
