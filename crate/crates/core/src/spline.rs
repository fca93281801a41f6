//! Tensor-product cubic B-spline interpolation on uniform lattices.

use crate::linalg::solve_tridiagonal;

/// End-slope condition used when fitting along an axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum EndSlope {
    /// Zero derivative at both ends.
    Zero,
    /// Derivative estimated from the data with one-sided differences.
    Estimated,
}

#[derive(Debug, Clone)]
pub(crate) struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
    pub ends: EndSlope,
}

#[derive(Debug, Clone)]
pub(crate) struct TensorSpline {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    coeffs: Vec<f64>,
}

impl TensorSpline {
    /// Fit the interpolant to `data`, laid out row-major with the last axis fastest.
    pub fn new(axes: Vec<Axis>, data: Vec<f64>) -> Self {
        let mut dims: Vec<usize> = axes.iter().map(|a| a.len).collect();
        assert_eq!(dims.iter().product::<usize>(), data.len());
        let mut cur = data;
        for (d, axis) in axes.iter().enumerate() {
            if axis.len < 2 {
                continue;
            }
            let outer: usize = dims[..d].iter().product();
            let inner: usize = dims[d + 1..].iter().product();
            let n = dims[d];
            let m = n + 2;
            let mut next = vec![0.0; outer * m * inner];
            let mut line = vec![0.0; n];
            for o in 0..outer {
                for i in 0..inner {
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = cur[(o * n + k) * inner + i];
                    }
                    let c = fit_line(&line, axis.step, axis.ends);
                    for (k, v) in c.into_iter().enumerate() {
                        next[(o * m + k) * inner + i] = v;
                    }
                }
            }
            dims[d] = m;
            cur = next;
        }
        let mut strides = vec![1; dims.len()];
        for d in (0..dims.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * dims[d + 1];
        }
        TensorSpline {
            axes,
            strides,
            coeffs: cur,
        }
    }

    pub fn eval(&self, coords: &[f64]) -> f64 {
        debug_assert_eq!(coords.len(), self.axes.len());
        let mut stencil = [(0usize, [0.0f64; 4]); 4];
        for (d, axis) in self.axes.iter().enumerate() {
            if axis.len < 2 {
                stencil[d] = (0, [1.0, 0.0, 0.0, 0.0]);
                continue;
            }
            let u = ((coords[d] - axis.start) / axis.step).clamp(0.0, (axis.len - 1) as f64);
            let i = (u.floor() as usize).min(axis.len - 2);
            let t = u - i as f64;
            let s = 1.0 - t;
            let t2 = t * t;
            let t3 = t2 * t;
            stencil[d] = (
                i,
                [
                    s * s * s / 6.0,
                    (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
                    (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
                    t3 / 6.0,
                ],
            );
        }
        self.accumulate(0, 0, &stencil)
    }

    fn accumulate(&self, d: usize, offset: usize, stencil: &[(usize, [f64; 4]); 4]) -> f64 {
        if d == self.axes.len() {
            return self.coeffs[offset];
        }
        let (base, w) = &stencil[d];
        if self.axes[d].len < 2 {
            return self.accumulate(d + 1, offset, stencil);
        }
        let mut acc = 0.0;
        for (k, wk) in w.iter().enumerate() {
            if *wk != 0.0 {
                acc += wk * self.accumulate(d + 1, offset + (base + k) * self.strides[d], stencil);
            }
        }
        acc
    }
}

fn end_slopes(f: &[f64], h: f64, ends: EndSlope) -> (f64, f64) {
    if ends == EndSlope::Zero {
        return (0.0, 0.0);
    }
    let n = f.len();
    let m = n - 1;
    match n {
        2 => {
            let d = (f[1] - f[0]) / h;
            (d, d)
        }
        3 => (
            (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h),
            (3.0 * f[m] - 4.0 * f[m - 1] + f[m - 2]) / (2.0 * h),
        ),
        _ => (
            (-11.0 * f[0] + 18.0 * f[1] - 9.0 * f[2] + 2.0 * f[3]) / (6.0 * h),
            (11.0 * f[m] - 18.0 * f[m - 1] + 9.0 * f[m - 2] - 2.0 * f[m - 3]) / (6.0 * h),
        ),
    }
}

/// Coefficients `c_{-1}, …, c_n` of the clamped cubic B-spline through `f`.
fn fit_line(f: &[f64], h: f64, ends: EndSlope) -> Vec<f64> {
    let n = f.len();
    let (d0, dn) = end_slopes(f, h, ends);
    let mut lower = vec![1.0; n];
    let mut diag = vec![4.0; n];
    let mut upper = vec![1.0; n];
    let mut rhs: Vec<f64> = f.iter().map(|v| 6.0 * v).collect();
    upper[0] = 2.0;
    rhs[0] += 2.0 * h * d0;
    lower[n - 1] = 2.0;
    rhs[n - 1] -= 2.0 * h * dn;
    diag[0] = 4.0;
    solve_tridiagonal(&lower, &diag, &upper, &mut rhs).expect("spline system is diagonally dominant");
    let mut out = Vec::with_capacity(n + 2);
    out.push(rhs[1] - 2.0 * h * d0);
    out.extend_from_slice(&rhs);
    out.push(rhs[n - 2] + 2.0 * h * dn);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(start: f64, end: f64, len: usize, ends: EndSlope) -> Axis {
        Axis {
            start,
            step: (end - start) / (len - 1) as f64,
            len,
            ends,
        }
    }

    #[test]
    fn reproduces_cubic_exactly_with_estimated_ends() {
        let ax = axis(0.0, 2.0, 9, EndSlope::Estimated);
        let data: Vec<f64> = (0..9)
            .map(|i| {
                let x = ax.start + i as f64 * ax.step;
                1.0 - x + 0.5 * x * x * x
            })
            .collect();
        let s = TensorSpline::new(vec![ax], data);
        for x in [0.0, 0.13, 0.77, 1.5, 2.0] {
            let e = 1.0 - x + 0.5 * x * x * x;
            assert!((s.eval(&[x]) - e).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn interpolates_nodes_in_two_dimensions() {
        let ax = axis(0.0, 1.0, 6, EndSlope::Zero);
        let ay = axis(-1.0, 1.0, 5, EndSlope::Estimated);
        let f = |x: f64, y: f64| (std::f64::consts::PI * x).cos() * (1.0 + y * y);
        let mut data = Vec::new();
        for i in 0..6 {
            for j in 0..5 {
                data.push(f(i as f64 * ax.step, -1.0 + j as f64 * ay.step));
            }
        }
        let s = TensorSpline::new(vec![ax.clone(), ay.clone()], data);
        for i in 0..6 {
            for j in 0..5 {
                let (x, y) = (i as f64 * ax.step, -1.0 + j as f64 * ay.step);
                assert!((s.eval(&[x, y]) - f(x, y)).abs() < 1e-12);
            }
        }
        let err = (s.eval(&[0.33, 0.21]) - f(0.33, 0.21)).abs();
        assert!(err < 5e-3, "{err}");
    }

    #[test]
    fn singleton_axis_is_ignored() {
        let a = axis(0.0, 1.0, 4, EndSlope::Estimated);
        let single = Axis {
            start: 0.0,
            step: 1.0,
            len: 1,
            ends: EndSlope::Estimated,
        };
        let s = TensorSpline::new(vec![single, a], vec![1.0, 2.0, 3.0, 4.0]);
        assert!((s.eval(&[5.0, 0.5]) - 2.5).abs() < 1e-12);
    }
}
