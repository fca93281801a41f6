//! Numerical checks on a built kernel: normalization, mass growth,
//! composition, symmetry, PDE residual and the initial-value limit.

use super::KernelEvaluator;
use crate::quadrature::DomainRule;

const NODES: usize = 8;

/// `∫_Ω U(x, t; y, s) φ(y) dy` with a rule adapted to the kernel's width.
pub(crate) fn integrate_against(
    ev: &KernelEvaluator,
    x: &[f64],
    t: f64,
    s: f64,
    mut phi: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let rule = DomainRule::windowed(ev.domain(), x, (2.0 * (t - s)).sqrt(), NODES);
    rule.sum(|y| ev.eval_unchecked(x, t, y, s) * phi(y))
}

/// Largest `|∫_Ω U(x, s + e; y, s) dy − 1|` over the given points and elapsed times.
pub fn normalization_error(ev: &KernelEvaluator, points: &[Vec<f64>], elapsed: &[f64], s: f64) -> f64 {
    let mut worst = 0.0f64;
    for x in points {
        for &e in elapsed {
            let m = integrate_against(ev, x, s + e, s, |_| 1.0);
            worst = worst.max((m - 1.0).abs());
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassSample {
    pub x: Vec<f64>,
    pub t: f64,
    pub s: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub samples: Vec<MassSample>,
    /// Smallest `C₁` with `mass ≤ e^{C₁(t−s)}` on every sample.
    pub growth_rate: f64,
    /// Smallest `C ≥ 0` with `mass ≤ C e^{C(t−s)}` on every sample.
    pub constant: f64,
}

/// Mass `∫_Ω |U(x, t; y, s)| dy` on each `(x, t, s)` sample and the fitted constants.
pub fn verify_mass_bound(ev: &KernelEvaluator, samples: &[(Vec<f64>, f64, f64)]) -> MassReport {
    let mut out = Vec::with_capacity(samples.len());
    let mut growth_rate = f64::NEG_INFINITY;
    let mut constant = 0.0f64;
    for (x, t, s) in samples {
        let rule = DomainRule::windowed(ev.domain(), x, (2.0 * (t - s)).sqrt(), NODES);
        let mass = rule.sum(|y| ev.eval_unchecked(x, *t, y, *s).abs());
        let e = t - s;
        growth_rate = growth_rate.max(mass.ln() / e);
        constant = constant.max(min_constant(mass, e));
        out.push(MassSample {
            x: x.clone(),
            t: *t,
            s: *s,
            mass,
        });
    }
    MassReport {
        samples: out,
        growth_rate,
        constant,
    }
}

/// Smallest `C ≥ 0` with `C e^{C e} ≥ m` (bisection; the map is increasing).
fn min_constant(m: f64, e: f64) -> f64 {
    if m <= 0.0 {
        return 0.0;
    }
    let f = |c: f64| c * (c * e).exp() - m;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

/// Largest relative defect of `∫_Ω U(x,t;z,τ) U(z,τ;y,s) dz = U(x,t;y,s)`
/// over `(x, t, τ, s, y)` triples.
pub fn chapman_kolmogorov_error(ev: &KernelEvaluator, triples: &[(Vec<f64>, f64, f64, f64, Vec<f64>)]) -> f64 {
    let mut worst = 0.0f64;
    for (x, t, tau, s, y) in triples {
        let (a, b) = (t - tau, tau - s);
        let (center, fine, coarse) = if a <= b {
            (x.as_slice(), a, b)
        } else {
            (y.as_slice(), b, a)
        };
        let rule = DomainRule::two_scale(ev.domain(), center, (2.0 * fine).sqrt(), (2.0 * coarse).sqrt(), NODES);
        let composed = rule.sum(|z| ev.eval_unchecked(x, *t, z, *tau) * ev.eval_unchecked(z, *tau, y, *s));
        let direct = ev.eval_unchecked(x, *t, y, *s);
        worst = worst.max((composed - direct).abs() / direct.abs());
    }
    worst
}

/// Largest relative asymmetry `|U(x,t;y,s) − U(y,t;x,s)| / |U(x,t;y,s)|`.
pub fn symmetry_error(ev: &KernelEvaluator, pairs: &[(Vec<f64>, Vec<f64>)], t: f64, s: f64) -> f64 {
    pairs
        .iter()
        .map(|(x, y)| {
            let a = ev.eval_unchecked(x, t, y, s);
            let b = ev.eval_unchecked(y, t, x, s);
            (a - b).abs() / a.abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Raw residuals of the centred `(∂_t − Δ − q)` stencil at `(h, Δt)`.
    pub residuals: Vec<f64>,
    pub max_coarse: f64,
    /// Same at `(h/2, Δt/2)`.
    pub max_fine: f64,
    /// `log₂(max_coarse / max_fine)`.
    pub order: f64,
    /// Largest Richardson-extrapolated residual relative to the size of the terms.
    pub max_extrapolated: f64,
}

/// Discrete residual of `(∂_t − Δ − q) U` in `(x, t)` at `(x, t, y, s)` samples,
/// with centred second-order differences of steps `(h, dt)` and `(h/2, dt/2)`.
pub fn pde_residual(
    ev: &KernelEvaluator,
    samples: &[(Vec<f64>, f64, Vec<f64>, f64)],
    h: f64,
    dt: f64,
) -> ResidualReport {
    let q = ev.coefficient();
    let stencil = |x: &[f64], t: f64, y: &[f64], s: f64, h: f64, dt: f64| {
        let u = |xx: &[f64], tt: f64| ev.eval_unchecked(xx, tt, y, s);
        let u0 = u(x, t);
        let ut = (u(x, t + dt) - u(x, t - dt)) / (2.0 * dt);
        let mut lap = 0.0;
        let mut xp = x.to_vec();
        for a in 0..x.len() {
            xp[a] = x[a] + h;
            let up = u(&xp, t);
            xp[a] = x[a] - h;
            let um = u(&xp, t);
            xp[a] = x[a];
            lap += (up - 2.0 * u0 + um) / (h * h);
        }
        let qu = q.eval(x, t) * u0;
        (ut - lap - qu, ut.abs() + lap.abs() + qu.abs())
    };
    let mut residuals = Vec::with_capacity(samples.len());
    let mut max_coarse = 0.0f64;
    let mut max_fine = 0.0f64;
    let mut max_extrapolated = 0.0f64;
    for (x, t, y, s) in samples {
        let (rc, scale) = stencil(x, *t, y, *s, h, dt);
        let (rf, _) = stencil(x, *t, y, *s, 0.5 * h, 0.5 * dt);
        residuals.push(rc);
        max_coarse = max_coarse.max(rc.abs());
        max_fine = max_fine.max(rf.abs());
        let extrapolated = (4.0 * rf - rc) / 3.0;
        if scale > 0.0 {
            max_extrapolated = max_extrapolated.max(extrapolated.abs() / scale);
        }
    }
    ResidualReport {
        residuals,
        max_coarse,
        max_fine,
        order: (max_coarse / max_fine).log2(),
        max_extrapolated,
    }
}

/// `|∫_Ω U(x, s + e; y, s) u₀(y) dy − u₀(x)|`.
pub fn delta_property_error(ev: &KernelEvaluator, x: &[f64], s: f64, e: f64, u0: &dyn Fn(&[f64]) -> f64) -> f64 {
    (integrate_against(ev, x, s + e, s, u0) - u0(x)).abs()
}
