//! Tabulation of the Levi correction on one axis.
//!
//! With `U = H·A` the ratio `A` obeys
//! `A(x, e; y, s) = 1 + ∫_0^e E[q(Z_τ, s+τ) A(Z_τ, τ; y, s)] dτ`,
//! where `Z` is the reflected bridge of the process with generator Δ, pinned
//! at `y` for elapsed time 0 and at `x` for elapsed time `e`. Each Levi term
//! `A_k` is this integral applied to `A_{k−1}`, starting from `A_0 = 1`, and
//! `H·A_k` is the k-th iterated correction `∫∫ H K_{k−1}`. The integral is
//! discretised once per source `(y, s)` into a matrix acting on lattice
//! values, after which every term is a matrix-vector product.

use super::{reflected_1d, ParametrixConfig};
use crate::quadrature::{gauss_hermite, gauss_legendre, Nodes1d};
use crate::spline::{Axis, EndSlope, TensorSpline};
use rayon::prelude::*;

/// Coefficient restricted to one axis: `(z, t) ↦ q`.
pub(crate) type AxisCoefficient<'a> = &'a (dyn Fn(f64, f64) -> f64 + Send + Sync);

const THETA_NODES: usize = 20;
const HERMITE_NODES: usize = 20;
const PIECE_NODES: usize = 8;

#[derive(Debug, Clone)]
pub(crate) struct AxisTable {
    spline: TensorSpline,
    time_dependent: bool,
}

impl AxisTable {
    /// Interpolated ratio `U/H` at `(x, e; y, s)`.
    pub fn ratio(&self, x: f64, e: f64, y: f64, s: f64) -> f64 {
        if self.time_dependent {
            self.spline.eval(&[s, y, e, x])
        } else {
            self.spline.eval(&[y, e, x])
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AxisBuild {
    pub table: AxisTable,
    /// Max over sources of `sup |A_k|`, for k = 1, 2, ...
    pub term_norms: Vec<f64>,
    pub tail: f64,
    pub converged: bool,
}

struct Lattice {
    length: f64,
    images: usize,
    nq: usize,
    hq: f64,
    ne: usize,
    de: f64,
}

pub(crate) fn build_axis_table(
    length: f64,
    q: AxisCoefficient<'_>,
    time_dependent: bool,
    config: &ParametrixConfig,
) -> AxisBuild {
    let nq = config.quad_nodes_space;
    let ne = config.quad_nodes_time + 1;
    let lat = Lattice {
        length,
        images: config.image_terms,
        nq,
        hq: length / (nq - 1) as f64,
        ne,
        de: config.time_horizon / (ne - 1) as f64,
    };
    let ns = if time_dependent {
        (config.quad_nodes_time / 2).max(4) + 1
    } else {
        1
    };
    let ds = if ns > 1 {
        config.time_horizon / (ns - 1) as f64
    } else {
        1.0
    };
    let sources: Vec<(f64, f64)> = (0..ns)
        .flat_map(|l| (0..nq).map(move |m| (l, m)))
        .map(|(l, m)| (l as f64 * ds, m as f64 * lat.hq))
        .collect();
    let results: Vec<SourceResult> = sources
        .par_iter()
        .map(|&(s, y)| solve_source(&lat, q, y, s, config))
        .collect();

    let mut data = Vec::with_capacity(ns * nq * ne * nq);
    let mut term_norms: Vec<f64> = Vec::new();
    let mut tail = 0.0f64;
    let mut converged = true;
    for r in results {
        data.extend_from_slice(&r.sum);
        for (k, v) in r.norms.iter().enumerate() {
            if k == term_norms.len() {
                term_norms.push(0.0);
            }
            term_norms[k] = term_norms[k].max(*v);
        }
        tail = tail.max(r.tail);
        converged &= r.converged;
    }
    let space_axis = Axis {
        start: 0.0,
        step: lat.hq,
        len: nq,
        ends: EndSlope::Zero,
    };
    let time_axis = Axis {
        start: 0.0,
        step: lat.de,
        len: ne,
        ends: EndSlope::Estimated,
    };
    let mut axes = Vec::new();
    if time_dependent {
        axes.push(Axis {
            start: 0.0,
            step: ds,
            len: ns,
            ends: EndSlope::Estimated,
        });
    }
    axes.extend([space_axis.clone(), time_axis, space_axis]);
    AxisBuild {
        table: AxisTable {
            spline: TensorSpline::new(axes, data),
            time_dependent,
        },
        term_norms,
        tail,
        converged,
    }
}

struct SourceResult {
    sum: Vec<f64>,
    norms: Vec<f64>,
    tail: f64,
    converged: bool,
}

fn solve_source(lat: &Lattice, q: AxisCoefficient<'_>, y: f64, s: f64, config: &ParametrixConfig) -> SourceResult {
    let (nq, ne) = (lat.nq, lat.ne);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(ne * nq);
    for _ in 0..nq {
        rows.push(Vec::new());
    }
    for j in 1..ne {
        for i in 0..nq {
            rows.push(bridge_row(lat, q, i as f64 * lat.hq, j, y, s));
        }
    }
    let mut prev = vec![1.0; ne * nq];
    let mut sum = prev.clone();
    let mut norms = Vec::new();
    for _ in 0..config.levi_terms {
        let mut next = vec![0.0; ne * nq];
        let mut sup = 0.0f64;
        for (idx, row) in rows.iter().enumerate().skip(nq) {
            let v: f64 = row.iter().zip(&prev).map(|(w, a)| w * a).sum();
            next[idx] = v;
            sup = sup.max(v.abs());
        }
        for (a, b) in sum.iter_mut().zip(&next) {
            *a += b;
        }
        norms.push(sup);
        prev = next;
        if sup <= config.series_tol {
            break;
        }
    }
    let tail = geometric_tail(&norms);
    SourceResult {
        sum,
        converged: tail <= config.series_tol,
        norms,
        tail,
    }
}

/// Tail estimate `r/(1−r)·|last|` from the ratio of the last two term norms.
pub(crate) fn geometric_tail(norms: &[f64]) -> f64 {
    match norms {
        [] => f64::INFINITY,
        [.., last] if *last == 0.0 => 0.0,
        [only] => *only,
        [.., a, b] => {
            let r = b / a;
            if r < 1.0 {
                b * r / (1.0 - r)
            } else {
                f64::INFINITY
            }
        }
    }
}

/// Fold a real coordinate into `[0, L]` by even reflection.
fn fold(z: f64, l: f64) -> f64 {
    let r = z.rem_euclid(2.0 * l);
    if r > l {
        2.0 * l - r
    } else {
        r
    }
}

/// Cubic (or lower, near the start) Lagrange stencil on `0, h, 2h, …, (n−1)h`,
/// in units of `h`.
#[inline]
fn lagrange_stencil(u: f64, n: usize) -> (usize, usize, [f64; 4]) {
    match n {
        1 => (0, 1, [1.0, 0.0, 0.0, 0.0]),
        2 => (0, 2, [1.0 - u, u, 0.0, 0.0]),
        3 => (
            0,
            3,
            [0.5 * (u - 1.0) * (u - 2.0), -u * (u - 2.0), 0.5 * u * (u - 1.0), 0.0],
        ),
        _ => {
            let i0 = ((u.floor() as isize) - 1).clamp(0, (n - 4) as isize) as usize;
            let r = u - i0 as f64;
            let (r1, r2, r3) = (r - 1.0, r - 2.0, r - 3.0);
            (
                i0,
                4,
                [
                    -r1 * r2 * r3 / 6.0,
                    0.5 * r * r2 * r3,
                    -0.5 * r * r1 * r3,
                    r * r1 * r2 / 6.0,
                ],
            )
        }
    }
}

/// One row of the bridge operator: weights on lattice values `A(z_m, e_l)`,
/// `l ≤ j`, reproducing `∫_0^{e_j} E[q A] dτ` at `(x, e_j)`.
fn bridge_row(lat: &Lattice, q: AxisCoefficient<'_>, x: f64, j: usize, y: f64, s: f64) -> Vec<f64> {
    let nq = lat.nq;
    let e = j as f64 * lat.de;
    let mut row = vec![0.0; (j + 1) * nq];
    let images = image_weights(x, y, e, lat.length, lat.images);
    let h_full = reflected_1d(x, y, e, lat.length, lat.images);
    let theta = gauss_legendre(THETA_NODES);
    let half_pi = 0.5 * std::f64::consts::PI;
    let mut zs: Vec<(f64, f64)> = Vec::with_capacity(128);
    for (ct, wt) in theta.nodes.iter().zip(&theta.weights) {
        let th = half_pi * (1.0 + ct);
        let tau = 0.5 * e * (1.0 - th.cos());
        let dtau = half_pi * wt * 0.5 * e * th.sin();
        let (l0, lp, lw) = lagrange_stencil(tau / lat.de, j + 1);
        let t_abs = s + tau;
        zs.clear();
        bridge_nodes(lat, x, y, e, tau, h_full, &images, &mut zs);
        for &(zf, wz) in &zs {
            let weight = dtau * wz * q(zf, t_abs);
            if weight == 0.0 {
                continue;
            }
            let (m0, mp, mw) = lagrange_stencil(zf / lat.hq, nq);
            for a in 0..lp {
                let base = (l0 + a) * nq + m0;
                let wa = weight * lw[a];
                for b in 0..mp {
                    row[base + b] += wa * mw[b];
                }
            }
        }
    }
    row
}

/// Nodes in `[0, L]` and weights for the bridge law at elapsed time `tau`.
///
/// A single interior image uses Gauss–Hermite on its Gaussian. Otherwise the
/// density `H(x, e−τ; z) H(z, τ; y) / H(x, e; y)` is integrated directly over
/// the windows where it is not negligible.
#[allow(clippy::too_many_arguments)]
fn bridge_nodes(
    lat: &Lattice,
    x: f64,
    y: f64,
    e: f64,
    tau: f64,
    h_full: f64,
    images: &[(f64, f64)],
    out: &mut Vec<(f64, f64)>,
) {
    let l = lat.length;
    let var = 2.0 * tau * (e - tau) / e;
    let sd = var.sqrt();
    let mean = |yi: f64| (x * tau + yi * (e - tau)) / e;
    if images.len() == 1 {
        let mu = mean(images[0].0);
        let reach = 7.7 * sd;
        if mu - reach > 0.0 && mu + reach < l {
            let rule = gauss_hermite(HERMITE_NODES);
            let scale = (2.0 * var).sqrt();
            let norm = std::f64::consts::PI.sqrt();
            for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
                out.push((mu + scale * xi, w / norm));
            }
            return;
        }
    }
    let density = |z: f64| reflected_1d(x, z, e - tau, l, lat.images) * reflected_1d(z, y, tau, l, lat.images) / h_full;
    let mut push_rule = |rule: Nodes1d| {
        for (z, w) in rule.points.iter().zip(&rule.weights) {
            out.push((*z, w * density(*z)));
        }
    };
    if sd > l / 8.0 {
        push_rule(Nodes1d::composite(0.0, l, (2.0 * sd).min(0.5 * l), PIECE_NODES));
        return;
    }
    let mut windows: Vec<(f64, f64)> = images
        .iter()
        .map(|&(yi, _)| {
            let c = fold(mean(yi), l);
            ((c - 8.5 * sd).max(0.0), (c + 8.5 * sd).min(l))
        })
        .collect();
    windows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(windows.len());
    for w in windows {
        match merged.last_mut() {
            Some(last) if w.0 <= last.1 => last.1 = last.1.max(w.1),
            _ => merged.push(w),
        }
    }
    for (a, b) in merged {
        push_rule(Nodes1d::composite(a, b, 3.0 * sd, PIECE_NODES));
    }
}

/// Image sources of `y` with normalised weights proportional to `G(x − y', e)`.
fn image_weights(x: f64, y: f64, e: f64, l: f64, m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(4 * m + 2);
    let mut max_log = f64::NEG_INFINITY;
    let m = m as isize;
    for k in -m..=m {
        let shift = 2.0 * k as f64 * l;
        for yi in [y + shift, -y + shift] {
            let lg = -(x - yi).powi(2) / (4.0 * e);
            max_log = max_log.max(lg);
            out.push((yi, lg));
        }
    }
    let mut total = 0.0;
    for p in out.iter_mut() {
        p.1 = (p.1 - max_log).exp();
        total += p.1;
    }
    out.retain(|p| p.1 > 1e-17 * total);
    for p in out.iter_mut() {
        p.1 /= total;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_maps_into_interval() {
        assert!((fold(-0.25, 1.0) - 0.25).abs() < 1e-15);
        assert!((fold(1.25, 1.0) - 0.75).abs() < 1e-15);
        assert!((fold(2.25, 1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn bridge_weights_integrate_to_one() {
        let lat = Lattice {
            length: 1.0,
            images: 6,
            nq: 9,
            hq: 0.125,
            ne: 5,
            de: 0.25,
        };
        for (x, y, e, tau) in [
            (0.5, 0.5, 0.01, 0.004),
            (0.02, 0.1, 0.05, 0.01),
            (0.3, 0.9, 1.0, 0.5),
            (0.1, 0.8, 1.0, 1e-3),
        ] {
            let images = image_weights(x, y, e, 1.0, 6);
            let h = reflected_1d(x, y, e, 1.0, 6);
            let mut nodes = Vec::new();
            bridge_nodes(&lat, x, y, e, tau, h, &images, &mut nodes);
            let total: f64 = nodes.iter().map(|p| p.1).sum();
            assert!((total - 1.0).abs() < 1e-8, "{x} {y} {e} {tau}: {total}");
        }
    }

    #[test]
    fn lagrange_weights_reproduce_cubics() {
        let (i0, p, w) = lagrange_stencil(3.3, 10);
        let v: f64 = (0..p).map(|a| w[a] * ((i0 + a) as f64).powi(3)).sum();
        assert!((v - 3.3f64.powi(3)).abs() < 1e-12);
    }

    #[test]
    fn tail_estimate_cases() {
        assert_eq!(geometric_tail(&[0.5, 0.0]), 0.0);
        assert!((geometric_tail(&[1.0, 0.5]) - 0.5).abs() < 1e-15);
        assert!(geometric_tail(&[1.0, 2.0]).is_infinite());
    }
}
