//! Fourth-order finite differences that switch to one-sided stencils near
//! the ends of `[lo, hi]` so that no sample leaves the interval.

pub(crate) fn d1(g: impl Fn(f64) -> f64, x: f64, lo: f64, hi: f64, eta: f64) -> f64 {
    if x - 2.0 * eta >= lo && x + 2.0 * eta <= hi {
        (-g(x + 2.0 * eta) + 8.0 * g(x + eta) - 8.0 * g(x - eta) + g(x - 2.0 * eta)) / (12.0 * eta)
    } else {
        let dir = if x - lo <= hi - x { 1.0 } else { -1.0 };
        let h = dir * eta;
        let s = [-25.0, 48.0, -36.0, 16.0, -3.0];
        s.iter().enumerate().map(|(k, c)| c * g(x + k as f64 * h)).sum::<f64>() / (12.0 * h)
    }
}

pub(crate) fn d2(g: impl Fn(f64) -> f64, x: f64, lo: f64, hi: f64, eta: f64) -> f64 {
    if x - 2.0 * eta >= lo && x + 2.0 * eta <= hi {
        (-g(x + 2.0 * eta) + 16.0 * g(x + eta) - 30.0 * g(x) + 16.0 * g(x - eta) - g(x - 2.0 * eta))
            / (12.0 * eta * eta)
    } else {
        let dir = if x - lo <= hi - x { 1.0 } else { -1.0 };
        let h = dir * eta;
        let s = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
        s.iter().enumerate().map(|(k, c)| c * g(x + k as f64 * h)).sum::<f64>() / (12.0 * eta * eta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_are_exact_on_quartics() {
        let g = |x: f64| x.powi(4) - 2.0 * x.powi(3) + x;
        let dg = |x: f64| 4.0 * x.powi(3) - 6.0 * x * x + 1.0;
        let ddg = |x: f64| 12.0 * x * x - 12.0 * x;
        for x in [0.0, 0.001, 0.5, 0.999, 1.0] {
            assert!((d1(g, x, 0.0, 1.0, 1e-2) - dg(x)).abs() < 1e-9, "d1 at {x}");
            assert!((d2(g, x, 0.0, 1.0, 1e-2) - ddg(x)).abs() < 1e-7, "d2 at {x}");
        }
    }
}
