//! Gauss rules and composite panel rules on intervals.

use crate::domain::DomainSpec;
use gauss_quad::{GaussHermite, GaussLegendre};
use std::num::NonZeroUsize;
use std::sync::OnceLock;

pub(crate) const MAX_ORDER: usize = 128;

/// Nodes and weights of a rule on its reference interval.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

static LEGENDRE: [OnceLock<Rule>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];
static HERMITE: [OnceLock<Rule>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];

fn order(n: usize) -> NonZeroUsize {
    assert!(
        (1..=MAX_ORDER).contains(&n),
        "quadrature order {n} outside 1..={MAX_ORDER}"
    );
    NonZeroUsize::new(n).unwrap()
}

/// Gauss–Legendre rule with `n` nodes on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> &'static Rule {
    LEGENDRE[n].get_or_init(|| {
        let rule = GaussLegendre::new(order(n));
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Rule { nodes, weights }
    })
}

/// Gauss–Hermite rule with `n` nodes for the weight `exp(-x²)` on ℝ.
pub fn gauss_hermite(n: usize) -> &'static Rule {
    HERMITE[n].get_or_init(|| {
        let rule = GaussHermite::new(order(n));
        let (nodes, weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Rule { nodes, weights }
    })
}

/// `∫_a^b f` with an `n`-point Gauss–Legendre rule.
pub fn integrate(a: f64, b: f64, n: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let rule = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Concrete one-dimensional rule: points with weights on some interval.
#[derive(Debug, Clone, Default)]
pub struct Nodes1d {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Nodes1d {
    /// Composite Gauss–Legendre over `[a, b]` with panels no wider than `max_width`.
    pub fn composite(a: f64, b: f64, max_width: f64, n: usize) -> Self {
        let mut out = Nodes1d::default();
        if !(b > a) {
            return out;
        }
        let panels = ((b - a) / max_width).ceil().clamp(1.0, 1.0e6) as usize;
        out.push_panels(a, b, panels, n);
        out
    }

    /// Composite rule over `[a, b]` with a fixed number of equal panels.
    pub fn panels(a: f64, b: f64, panels: usize, n: usize) -> Self {
        let mut out = Nodes1d::default();
        if b > a {
            out.push_panels(a, b, panels.max(1), n);
        }
        out
    }

    /// Rule for a function concentrated around `center` with length scale
    /// `width`: the window `center ± reach·width` clipped to `[lo, hi]`,
    /// split into panels of width at most `width`.
    pub fn windowed(lo: f64, hi: f64, center: f64, width: f64, reach: f64, n: usize) -> Self {
        let a = lo.max(center - reach * width);
        let b = hi.min(center + reach * width);
        Self::composite(a, b, width, n)
    }

    /// Fine panels of width `fine` on `center ± reach·fine`, coarse panels of
    /// width `coarse` on the rest of `[lo, hi]`.
    pub fn two_scale(lo: f64, hi: f64, center: f64, fine: f64, coarse: f64, reach: f64, n: usize) -> Self {
        let a = lo.max(center - reach * fine);
        let b = hi.min(center + reach * fine);
        let mut out = Self::composite(lo, a, coarse, n);
        let mid = Self::composite(a, b, fine, n);
        let right = Self::composite(b, hi, coarse, n);
        for part in [mid, right] {
            out.points.extend(part.points);
            out.weights.extend(part.weights);
        }
        out
    }

    fn push_panels(&mut self, a: f64, b: f64, panels: usize, n: usize) {
        let rule = gauss_legendre(n);
        let step = (b - a) / panels as f64;
        self.points.reserve(panels * n);
        self.weights.reserve(panels * n);
        for p in 0..panels {
            let lo = a + p as f64 * step;
            let hi = if p + 1 == panels { b } else { lo + step };
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                self.points.push(mid + half * x);
                self.weights.push(w * half);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sum(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Tensor-product rule over the model domain.
#[derive(Debug, Clone)]
pub struct DomainRule {
    pub dim: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl DomainRule {
    fn tensor(axes: Vec<Nodes1d>) -> Self {
        let dim = axes.len();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        if dim == 1 {
            for (x, w) in axes[0].points.iter().zip(&axes[0].weights) {
                points.push([*x, 0.0]);
                weights.push(*w);
            }
        } else {
            for (x, wx) in axes[0].points.iter().zip(&axes[0].weights) {
                for (y, wy) in axes[1].points.iter().zip(&axes[1].weights) {
                    points.push([*x, *y]);
                    weights.push(wx * wy);
                }
            }
        }
        DomainRule { dim, points, weights }
    }

    /// Rule for integrands concentrated within a few `sd` of `center`; panels
    /// never exceed a quarter of the axis length.
    pub fn windowed(domain: &DomainSpec, center: &[f64], sd: f64, n: usize) -> Self {
        let axes = domain
            .lengths()
            .iter()
            .enumerate()
            .map(|(a, &l)| Nodes1d::windowed(0.0, l, center[a], sd.min(0.25 * l), 12.0 * sd / sd.min(0.25 * l), n))
            .collect();
        Self::tensor(axes)
    }

    /// Whole-domain rule, fine near `center` and coarse elsewhere.
    pub fn two_scale(domain: &DomainSpec, center: &[f64], fine: f64, coarse: f64, n: usize) -> Self {
        let axes = domain
            .lengths()
            .iter()
            .enumerate()
            .map(|(a, &l)| {
                let f = fine.min(0.25 * l);
                Nodes1d::two_scale(0.0, l, center[a], f, coarse.min(0.25 * l), 12.0 * fine / f, n)
            })
            .collect();
        Self::tensor(axes)
    }

    /// Uniform composite rule over the whole domain.
    pub fn uniform(domain: &DomainSpec, max_width: f64, n: usize) -> Self {
        let axes = domain
            .lengths()
            .iter()
            .map(|&l| Nodes1d::composite(0.0, l, max_width, n))
            .collect();
        Self::tensor(axes)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sum(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let d = self.dim;
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(&p[..d])).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_is_exact_for_polynomials() {
        let v = integrate(0.0, 2.0, 4, |x| x.powi(7));
        assert!((v - 32.0).abs() < 1e-12);
    }

    #[test]
    fn hermite_weights_sum_to_root_pi() {
        let r = gauss_hermite(20);
        let s: f64 = r.weights.iter().sum();
        assert!((s - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn composite_rule_integrates_gaussian() {
        let rule = Nodes1d::windowed(-100.0, 100.0, 0.3, 0.1, 12.0, 8);
        let v = rule.sum(|x| (-(x - 0.3f64).powi(2) / 0.02).exp());
        let exact = (std::f64::consts::PI * 0.02).sqrt();
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn empty_interval_gives_empty_rule() {
        assert!(Nodes1d::composite(1.0, 1.0, 0.1, 4).is_empty());
    }
}
