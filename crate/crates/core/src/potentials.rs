//! Volume and single-layer potentials of the Neumann kernel and their time
//! derivatives.
//!
//! Time integrals use `τ = t − u²`, which turns the `(t − τ)^{−1/2}`
//! concentration of boundary integrals into a smooth integrand in `u`. Spatial
//! integrals use rules windowed to the kernel width `√(2(t − τ))`.

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::fd;
use crate::forward::boundary_samples;
use crate::heat_kernel::KernelEvaluator;
use crate::quadrature::{gauss_legendre, DomainRule, Nodes1d, MAX_ORDER as MAX_TIME_ORDER};
use crate::SpaceTimeFn;
use std::sync::Arc;

/// Interior density `φ(y, τ)`.
#[derive(Clone)]
pub struct VolumeDensity {
    value: SpaceTimeFn,
    laplacian: Option<SpaceTimeFn>,
    spatially_c2: bool,
}

impl std::fmt::Debug for VolumeDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VolumeDensity")
            .field("laplacian", &self.laplacian.is_some())
            .field("spatially_c2", &self.spatially_c2)
            .finish()
    }
}

impl VolumeDensity {
    /// Density with no smoothness claim; [`volume_potential_dt`] rejects it.
    pub fn new(f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        VolumeDensity {
            value: Arc::new(f),
            laplacian: None,
            spatially_c2: false,
        }
    }

    /// Density that is `C²` in space.
    pub fn smooth(f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        VolumeDensity {
            spatially_c2: true,
            ..Self::new(f)
        }
    }

    pub fn zero() -> Self {
        Self::smooth(|_, _| 0.0)
    }

    /// Exact Laplacian, used instead of finite differences.
    pub fn with_laplacian(mut self, lap: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.laplacian = Some(Arc::new(lap));
        self
    }

    pub fn is_spatially_c2(&self) -> bool {
        self.spatially_c2
    }

    pub fn eval(&self, y: &[f64], tau: f64) -> f64 {
        (self.value)(y, tau)
    }
}

/// Boundary density `φ(y, τ)` on `Γ × [s, t]`.
#[derive(Clone)]
pub struct LayerDensity {
    value: SpaceTimeFn,
    time_derivative: Option<SpaceTimeFn>,
}

impl std::fmt::Debug for LayerDensity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LayerDensity")
            .field("time_derivative", &self.time_derivative.is_some())
            .finish()
    }
}

impl LayerDensity {
    pub fn new(f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        LayerDensity {
            value: Arc::new(f),
            time_derivative: None,
        }
    }

    pub fn zero() -> Self {
        Self::new(|_, _| 0.0)
    }

    pub fn with_time_derivative(mut self, dt: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        self.time_derivative = Some(Arc::new(dt));
        self
    }

    pub fn eval(&self, y: &[f64], tau: f64) -> f64 {
        (self.value)(y, tau)
    }

    /// `∂_τ φ`, by finite differences when no derivative was supplied.
    /// `s` is the earliest time at which `φ` may be sampled.
    pub fn dt(&self, y: &[f64], tau: f64, s: f64, eta: f64) -> f64 {
        match &self.time_derivative {
            Some(d) => d(y, tau),
            None => fd::d1(|r| (self.value)(y, r), tau, s, f64::INFINITY, eta),
        }
    }
}

/// Where the zero-order coefficient is evaluated in the volume term of
/// [`volume_potential_dt`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientPoint {
    /// `q(y, τ)` at the integration point.
    #[default]
    Integration,
    /// `q(x, τ)` at the target point.
    Target,
}

/// Quadrature resolution of the potentials.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialQuadrature {
    /// Gauss nodes in `u = √(t − τ)`.
    pub time_nodes: usize,
    /// Gauss nodes per spatial panel.
    pub space_nodes: usize,
    /// Time nodes of the nested `∂_t q` correction.
    pub nested_time_nodes: usize,
    /// Spatial nodes per panel of the nested correction.
    pub nested_space_nodes: usize,
    /// Finite-difference step relative to the axis length (space) or the
    /// kernel horizon (time).
    pub fd_step: f64,
    pub coefficient_point: CoefficientPoint,
}

impl Default for PotentialQuadrature {
    fn default() -> Self {
        PotentialQuadrature {
            time_nodes: 24,
            space_nodes: 8,
            nested_time_nodes: 8,
            nested_space_nodes: 6,
            fd_step: 1e-3,
            coefficient_point: CoefficientPoint::Integration,
        }
    }
}

impl PotentialQuadrature {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("space_nodes", self.space_nodes),
            ("nested_space_nodes", self.nested_space_nodes),
        ];
        if self.time_nodes == 0 || self.nested_time_nodes == 0 {
            return Err(Error::InvalidInput("time node counts must be at least 1".into()));
        }
        if let Some((name, n)) = counts.iter().find(|(_, n)| !(1..=MAX_TIME_ORDER).contains(n)) {
            return Err(Error::InvalidInput(format!(
                "{name} = {n} outside 1..={MAX_TIME_ORDER}"
            )));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 0.5) {
            return Err(Error::InvalidInput(format!(
                "fd_step must lie in (0, 0.5), got {}",
                self.fd_step
            )));
        }
        Ok(())
    }

    /// Twice the time nodes and half again the spatial nodes.
    pub fn refined(&self) -> Self {
        PotentialQuadrature {
            time_nodes: 2 * self.time_nodes,
            space_nodes: self.space_nodes + self.space_nodes / 2,
            nested_time_nodes: 2 * self.nested_time_nodes,
            nested_space_nodes: self.nested_space_nodes + self.nested_space_nodes / 2,
            ..self.clone()
        }
    }
}

fn check_times(t: f64, s: f64) -> Result<()> {
    if s < t && s.is_finite() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("potential needs s < t, got s = {s}, t = {t}")))
    }
}

fn check_point(ev: &KernelEvaluator, x: &[f64]) -> Result<()> {
    let dim = ev.domain().dimension();
    if x.len() != dim {
        return Err(Error::InvalidInput(format!("point must have dimension {dim}")));
    }
    Ok(())
}

/// A boundary quadrature node with its outward normal `sign · e_axis`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BoundaryNode {
    pub point: [f64; 2],
    pub axis: usize,
    pub sign: f64,
    pub weight: f64,
}

/// Rule on `Γ` concentrated within a few `sd` of `center` along each edge.
pub(crate) fn boundary_rule(domain: &DomainSpec, center: &[f64], sd: f64, n: usize) -> Vec<BoundaryNode> {
    match *domain {
        DomainSpec::Interval { length } => vec![
            BoundaryNode {
                point: [0.0, 0.0],
                axis: 0,
                sign: -1.0,
                weight: 1.0,
            },
            BoundaryNode {
                point: [length, 0.0],
                axis: 0,
                sign: 1.0,
                weight: 1.0,
            },
        ],
        DomainSpec::Rectangle { lx, ly } => {
            let lengths = [lx, ly];
            let mut out = Vec::new();
            for axis in 0..2 {
                let tangent = 1 - axis;
                let lt = lengths[tangent];
                let width = sd.min(0.25 * lt);
                let rule = Nodes1d::windowed(0.0, lt, center[tangent], width, 12.0 * sd / width, n);
                for (sign, at) in [(-1.0, 0.0), (1.0, lengths[axis])] {
                    for (p, w) in rule.points.iter().zip(&rule.weights) {
                        let mut point = [0.0; 2];
                        point[axis] = at;
                        point[tangent] = *p;
                        out.push(BoundaryNode {
                            point,
                            axis,
                            sign,
                            weight: *w,
                        });
                    }
                }
            }
            out
        }
    }
}

/// Nodes `(τ, u, w)` of `∫_a^b F(τ) dτ ≈ Σ w F(τ)` for `a < b ≤ t`, Gauss in
/// `u = √(t − τ)`.
pub(crate) fn time_slices(t: f64, a: f64, b: f64, n: usize) -> Vec<(f64, f64, f64)> {
    graded_time_slices(t, a, b, n, &[])
}

/// [`time_slices`] with extra panel breaks at the given values of `u`.
/// Rules longer than the largest tabulated order are split into panels.
fn graded_time_slices(t: f64, a: f64, b: f64, n: usize, breaks: &[f64]) -> Vec<(f64, f64, f64)> {
    let (lo, hi) = ((t - b).max(0.0).sqrt(), (t - a).sqrt());
    let mut edges = vec![lo];
    edges.extend(breaks.iter().copied().filter(|&u| u > lo && u < hi));
    edges.push(hi);
    let pieces = n.div_ceil(MAX_TIME_ORDER);
    let per = n.div_ceil(pieces);
    let mut out = Vec::with_capacity((edges.len() - 1) * pieces * per);
    for e in edges.windows(2) {
        let width = (e[1] - e[0]) / pieces as f64;
        for p in 0..pieces {
            let start = e[0] + p as f64 * width;
            let half = 0.5 * width;
            let rule = gauss_legendre(per);
            for (z, w) in rule.nodes.iter().zip(&rule.weights) {
                let u = start + half * (1.0 + z);
                out.push((t - u * u, u, half * w * 2.0 * u));
            }
        }
    }
    out
}

/// `∫_s^t ∫_Ω U(x, t; y, τ) g(y, τ) dy dτ`.
fn volume_integral(
    ev: &KernelEvaluator,
    x: &[f64],
    t: f64,
    s: f64,
    time_nodes: usize,
    space_nodes: usize,
    g: &dyn Fn(&[f64], f64) -> f64,
) -> f64 {
    time_slices(t, s, t, time_nodes)
        .into_iter()
        .map(|(tau, u, w)| {
            let space = DomainRule::windowed(ev.domain(), x, std::f64::consts::SQRT_2 * u, space_nodes);
            w * space.sum(|y| ev.eval_unchecked(x, t, y, tau) * g(y, tau))
        })
        .sum()
}

/// `∫_s^t ∫_Γ U(x, t; y, τ) g(y, τ, node) dσ(y) dτ`.
fn boundary_integral(
    ev: &KernelEvaluator,
    x: &[f64],
    t: f64,
    s: f64,
    time_nodes: usize,
    space_nodes: usize,
    g: &dyn Fn(&[f64], f64, &BoundaryNode) -> f64,
) -> f64 {
    let dim = ev.domain().dimension();
    // The kernel seen from Γ peaks where √(t − τ) is comparable to the
    // distance from x to Γ.
    let d = ev
        .domain()
        .lengths()
        .iter()
        .zip(x)
        .map(|(l, v)| v.min(l - v))
        .fold(f64::INFINITY, f64::min);
    graded_time_slices(t, s, t, time_nodes, &[0.25 * d, d, 4.0 * d])
        .into_iter()
        .map(|(tau, u, w)| {
            let nodes = boundary_rule(ev.domain(), x, std::f64::consts::SQRT_2 * u, space_nodes);
            let inner: f64 = nodes
                .iter()
                .map(|b| {
                    let y = &b.point[..dim];
                    b.weight * ev.eval_unchecked(x, t, y, tau) * g(y, tau, b)
                })
                .sum();
            w * inner
        })
        .sum()
}

/// `ψ(x, t) = ∫_s^t ∫_Ω U(x, t; y, τ) φ(y, τ) dy dτ`.
pub fn volume_potential(
    ev: &KernelEvaluator,
    phi: &VolumeDensity,
    x: &[f64],
    t: f64,
    s: f64,
    quad: &PotentialQuadrature,
) -> Result<f64> {
    check_times(t, s)?;
    check_point(ev, x)?;
    Ok(volume_integral(
        ev,
        x,
        t,
        s,
        quad.time_nodes,
        quad.space_nodes,
        &|y, tau| phi.eval(y, tau),
    ))
}

/// Laplacian of the density, exact when supplied.
fn laplacian(domain: &DomainSpec, phi: &VolumeDensity, y: &[f64], tau: f64, fd_step: f64) -> f64 {
    if let Some(lap) = &phi.laplacian {
        return lap(y, tau);
    }
    let base = [y[0], y.get(1).copied().unwrap_or(0.0)];
    let dim = y.len();
    let mut acc = 0.0;
    for a in 0..dim {
        let l = domain.length(a);
        acc += fd::d2(
            |v| {
                let mut p = base;
                p[a] = v;
                phi.eval(&p[..dim], tau)
            },
            y[a],
            0.0,
            l,
            fd_step * l,
        );
    }
    acc
}

/// Outward normal derivative of the density at a boundary node.
fn normal_derivative(domain: &DomainSpec, phi: &VolumeDensity, node: &BoundaryNode, tau: f64, fd_step: f64) -> f64 {
    let dim = domain.dimension();
    let a = node.axis;
    let l = domain.length(a);
    node.sign
        * fd::d1(
            |v| {
                let mut p = node.point;
                p[a] = v;
                phi.eval(&p[..dim], tau)
            },
            node.point[a],
            0.0,
            l,
            fd_step * l,
        )
}

/// Terms of `∂_t ψ` for the volume potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeDerivative {
    /// `φ(x, t)`.
    pub instantaneous: f64,
    /// `∫∫ U (Δφ + q φ)`.
    pub volume: f64,
    /// `−∫∫_Γ U ∂_ν φ`, present when `φ` has nonzero normal derivative.
    pub boundary: f64,
    /// `∫∫ U ∂_t q ψ`, present when `q` depends on time.
    pub coefficient: f64,
    pub total: f64,
}

impl VolumeDerivative {
    /// Everything but the instantaneous term.
    pub fn integral_part(&self) -> f64 {
        self.volume + self.boundary + self.coefficient
    }
}

/// `∂_t ψ(x, t)` from the derivative identity: the instantaneous term plus
/// `∫_s^t ∂_t f¹ dτ` with `f¹(x, t; τ) = ∫_Ω U(x, t; y, τ) φ(y, τ) dy`.
pub fn volume_potential_dt(
    ev: &KernelEvaluator,
    phi: &VolumeDensity,
    x: &[f64],
    t: f64,
    s: f64,
    quad: &PotentialQuadrature,
) -> Result<VolumeDerivative> {
    check_times(t, s)?;
    check_point(ev, x)?;
    if !phi.spatially_c2 {
        return Err(Error::Precondition(
            "derivative identity needs a density that is C² in space".into(),
        ));
    }
    let domain = *ev.domain();
    let q = ev.coefficient();
    let target = quad.coefficient_point == CoefficientPoint::Target;
    let volume = volume_integral(ev, x, t, s, quad.time_nodes, quad.space_nodes, &|y, tau| {
        let qv = if q.is_zero() {
            0.0
        } else if target {
            q.eval(x, tau)
        } else {
            q.eval(y, tau)
        };
        laplacian(&domain, phi, y, tau, quad.fd_step) + qv * phi.eval(y, tau)
    });
    let boundary = -boundary_integral(ev, x, t, s, quad.time_nodes, quad.space_nodes, &|_, tau, b| {
        normal_derivative(&domain, phi, b, tau, quad.fd_step)
    });
    let coefficient = volume_coefficient_term(ev, phi, x, t, s, quad);
    let instantaneous = phi.eval(x, t);
    Ok(VolumeDerivative {
        instantaneous,
        volume,
        boundary,
        coefficient,
        total: instantaneous + volume + boundary + coefficient,
    })
}

/// `ψ(x, t) = ∫_s^t ∫_Γ U(x, t; y, τ) φ(y, τ) dσ(y) dτ`.
pub fn single_layer_potential(
    ev: &KernelEvaluator,
    phi: &LayerDensity,
    x: &[f64],
    t: f64,
    s: f64,
    quad: &PotentialQuadrature,
) -> Result<f64> {
    check_times(t, s)?;
    check_point(ev, x)?;
    Ok(boundary_integral(
        ev,
        x,
        t,
        s,
        quad.time_nodes,
        quad.space_nodes,
        &|y, tau, _| phi.eval(y, tau),
    ))
}

/// `∂_t ψ` of the single-layer potential for a density vanishing at `τ = s`:
/// `∫∫_Γ U ∂_τ φ` plus, for time-dependent `q`, `∫∫_Ω U ∂_t q ψ`.
pub fn single_layer_dt(
    ev: &KernelEvaluator,
    phi: &LayerDensity,
    x: &[f64],
    t: f64,
    s: f64,
    quad: &PotentialQuadrature,
) -> Result<f64> {
    check_times(t, s)?;
    check_point(ev, x)?;
    for y in boundary_samples(ev.domain()) {
        let v = phi.eval(&y, s);
        if v.abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "layer density must vanish at the initial time; φ({y:?}, {s}) = {v:e}"
            )));
        }
    }
    let eta = quad.fd_step * ev.horizon();
    let main = boundary_integral(ev, x, t, s, quad.time_nodes, quad.space_nodes, &|y, tau, _| {
        phi.dt(y, tau, s, eta)
    });
    Ok(main + layer_coefficient_term(ev, phi, x, t, s, quad))
}

/// `∫∫_Ω U ∂_t q ψ` with `ψ` the volume potential of `φ`; zero for stationary `q`.
pub(crate) fn volume_coefficient_term(
    ev: &KernelEvaluator,
    phi: &VolumeDensity,
    x: &[f64],
    t: f64,
    s: f64,
    quad: &PotentialQuadrature,
) -> f64 {
    let q = ev.coefficient();
    if q.is_time_independent() {
        return 0.0;
    }
    let (nt, ns) = (quad.nested_time_nodes, quad.nested_space_nodes);
    volume_integral(ev, x, t, s, nt, ns, &|z, r| {
        if r <= s {
            return 0.0;
        }
        let inner = volume_integral(ev, z, r, s, nt, ns, &|y, tau| phi.eval(y, tau));
        q.dt(z, r) * inner
    })
}

/// `∫∫_Ω U ∂_t q ψ` with `ψ` the single-layer potential of `φ`.
pub(crate) fn layer_coefficient_term(
    ev: &KernelEvaluator,
    phi: &LayerDensity,
    x: &[f64],
    t: f64,
    s: f64,
    quad: &PotentialQuadrature,
) -> f64 {
    let q = ev.coefficient();
    if q.is_time_independent() {
        return 0.0;
    }
    let (nt, ns) = (quad.nested_time_nodes, quad.nested_space_nodes);
    volume_integral(ev, x, t, s, nt, ns, &|z, r| {
        if r <= s {
            return 0.0;
        }
        let inner = boundary_integral(ev, z, r, s, nt, ns, &|y, tau, _| phi.eval(y, tau));
        q.dt(z, r) * inner
    })
}

/// `∫_Γ |H(x, e; y)| dσ(y)` for the parametrix of the evaluator.
pub fn boundary_kernel_mass(ev: &KernelEvaluator, x: &[f64], e: f64) -> Result<f64> {
    check_point(ev, x)?;
    if !(e > 0.0) {
        return Err(Error::Domain(format!("elapsed time must be positive, got {e}")));
    }
    let dim = x.len();
    let nodes = boundary_rule(ev.domain(), x, (2.0 * e).sqrt(), 8);
    Ok(nodes
        .iter()
        .map(|b| b.weight * ev.parametrix(x, &b.point[..dim], e).abs())
        .sum())
}

/// Sampled `sup_y (|φ| + |∇φ| + |D²φ|)` at time `tau`, with derivatives by
/// finite differences on a lattice of `points` per axis.
pub fn c2_norm(domain: &DomainSpec, phi: &VolumeDensity, tau: f64, points: usize, fd_step: f64) -> f64 {
    let lengths = domain.lengths();
    let dim = lengths.len();
    let n = points.max(2);
    let mut worst = 0.0f64;
    let total = n.pow(dim as u32);
    for idx in 0..total {
        let mut y = [0.0; 2];
        let mut rest = idx;
        for a in 0..dim {
            y[a] = lengths[a] * (rest % n) as f64 / (n - 1) as f64;
            rest /= n;
        }
        let y = &y[..dim];
        let value = phi.eval(y, tau).abs();
        let mut grad = 0.0f64;
        let mut hess = 0.0f64;
        for a in 0..dim {
            let la = lengths[a];
            let ea = fd_step * la;
            let along = |v: f64| {
                let mut p = [y[0], y.get(1).copied().unwrap_or(0.0)];
                p[a] = v;
                phi.eval(&p[..dim], tau)
            };
            grad = grad.max(fd::d1(along, y[a], 0.0, la, ea).abs());
            hess = hess.max(fd::d2(along, y[a], 0.0, la, ea).abs());
            for b in (a + 1)..dim {
                let lb = lengths[b];
                let eb = fd_step * lb;
                let mixed = fd::d1(
                    |w| {
                        fd::d1(
                            |v| {
                                let mut p = [y[0], y[1]];
                                p[a] = v;
                                p[b] = w;
                                phi.eval(&p, tau)
                            },
                            y[a],
                            0.0,
                            la,
                            ea,
                        )
                    },
                    y[b],
                    0.0,
                    lb,
                    eb,
                );
                hess = hess.max(mixed.abs());
            }
        }
        worst = worst.max(value + grad + hess);
    }
    worst
}

/// Ratio of the integral part of `∂_t ψ` to `∫_s^t ‖φ(·, τ)‖_{C²} dτ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeBound {
    pub integral_part: f64,
    pub density_norm: f64,
    pub ratio: f64,
}

pub fn volume_derivative_bound(
    ev: &KernelEvaluator,
    phi: &VolumeDensity,
    x: &[f64],
    t: f64,
    s: f64,
    quad: &PotentialQuadrature,
) -> Result<VolumeBound> {
    let d = volume_potential_dt(ev, phi, x, t, s, quad)?;
    let domain = *ev.domain();
    let density_norm = crate::quadrature::integrate(s, t, 8, |tau| c2_norm(&domain, phi, tau, 17, quad.fd_step));
    let integral_part = d.integral_part().abs();
    Ok(VolumeBound {
        integral_part,
        density_norm,
        ratio: if density_norm > 0.0 {
            integral_part / density_norm
        } else {
            0.0
        },
    })
}

/// Sampled `sup |∂_t ψ|` over targets, `sup |∂_t φ|` over `Γ × (s, t_max)`
/// and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerBound {
    pub sup_potential_dt: f64,
    pub sup_density_dt: f64,
    pub constant: f64,
}

/// Fitted constant of `‖∂_t ψ‖_∞ ≤ C ‖∂_t φ‖_∞` over `(x, t)` targets on `Γ`.
pub fn layer_derivative_bound(
    ev: &KernelEvaluator,
    phi: &LayerDensity,
    targets: &[(Vec<f64>, f64)],
    s: f64,
    quad: &PotentialQuadrature,
) -> Result<LayerBound> {
    let mut sup_potential_dt = 0.0f64;
    let mut t_max = s;
    for (x, t) in targets {
        sup_potential_dt = sup_potential_dt.max(single_layer_dt(ev, phi, x, *t, s, quad)?.abs());
        t_max = t_max.max(*t);
    }
    let eta = quad.fd_step * ev.horizon();
    let mut sup_density_dt = 0.0f64;
    for y in boundary_samples(ev.domain()) {
        for k in 0..=32 {
            let tau = s + (t_max - s) * k as f64 / 32.0;
            sup_density_dt = sup_density_dt.max(phi.dt(&y, tau, s, eta).abs());
        }
    }
    Ok(LayerBound {
        sup_potential_dt,
        sup_density_dt,
        constant: if sup_density_dt > 0.0 {
            sup_potential_dt / sup_density_dt
        } else {
            0.0
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat_kernel::{build_fundamental_solution, ParametrixConfig, ZeroOrderCoefficient};
    use std::f64::consts::PI;

    fn heat() -> KernelEvaluator {
        build_fundamental_solution(
            ZeroOrderCoefficient::zero(),
            &DomainSpec::interval(1.0).unwrap(),
            &ParametrixConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn unit_density_gives_elapsed_time() {
        let ev = heat();
        let q = PotentialQuadrature::default();
        let v = volume_potential(&ev, &VolumeDensity::smooth(|_, _| 1.0), &[0.3], 0.7, 0.2, &q).unwrap();
        assert!((v - 0.5).abs() < 1e-12);
        let d = volume_potential_dt(&ev, &VolumeDensity::smooth(|_, _| 1.0), &[0.0], 0.7, 0.2, &q).unwrap();
        assert!((d.total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_density_matches_eigenfunction() {
        let ev = heat();
        let q = PotentialQuadrature::default();
        let phi = VolumeDensity::smooth(|y, _| (PI * y[0]).cos());
        let (x, t, s) = (0.3, 0.5, 0.3);
        let exact = (PI * x).cos() * (1.0 - (-PI * PI * (t - s)).exp()) / (PI * PI);
        let v = volume_potential(&ev, &phi, &[x], t, s, &q).unwrap();
        assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
        let d = volume_potential_dt(&ev, &phi, &[x], t, s, &q).unwrap();
        let exact_dt = (PI * x).cos() * (-PI * PI * (t - s)).exp();
        assert!((d.total - exact_dt).abs() < 1e-6, "{} vs {exact_dt}", d.total);
    }

    #[test]
    fn rough_density_rejected_by_derivative_identity() {
        let ev = heat();
        let e = volume_potential_dt(
            &ev,
            &VolumeDensity::new(|_, _| 1.0),
            &[0.5],
            0.5,
            0.0,
            &Default::default(),
        );
        assert!(matches!(e, Err(Error::Precondition(_))));
    }

    #[test]
    fn layer_density_must_start_at_zero() {
        let ev = heat();
        let e = single_layer_dt(
            &ev,
            &LayerDensity::new(|_, _| 1.0),
            &[0.0],
            0.5,
            0.0,
            &Default::default(),
        );
        assert!(matches!(e, Err(Error::Precondition(_))));
    }

    #[test]
    fn reversed_times_are_domain_errors() {
        let ev = heat();
        let q = PotentialQuadrature::default();
        assert!(matches!(
            volume_potential(&ev, &VolumeDensity::zero(), &[0.5], 0.1, 0.2, &q),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            single_layer_potential(&ev, &LayerDensity::zero(), &[0.0], 0.2, 0.2, &q),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn boundary_rule_covers_rectangle_perimeter() {
        let d = DomainSpec::rectangle(1.0, 2.0).unwrap();
        let nodes = boundary_rule(&d, &[0.5, 1.0], 10.0, 8);
        let total: f64 = nodes.iter().map(|b| b.weight).sum();
        assert!((total - 6.0).abs() < 1e-12);
    }
}
