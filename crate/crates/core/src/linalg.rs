//! Small direct solvers for the tridiagonal and banded systems that appear in
//! spline fitting and implicit time stepping.

use crate::error::{Error, Result};

/// Solve a tridiagonal system in place. `lower[0]` and `upper[n-1]` are ignored.
pub(crate) fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if n == 0 {
        return Ok(());
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::LinearSolve("zero pivot in tridiagonal system at row 0".into()));
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::LinearSolve(format!(
                "zero pivot in tridiagonal system at row {i}"
            )));
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Square banded matrix with equal lower and upper bandwidth, stored by rows.
#[derive(Debug, Clone)]
pub(crate) struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedMatrix {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i.abs_diff(j) <= self.bw);
        i * (2 * self.bw + 1) + (j + self.bw - i)
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    /// In-place LU without pivoting (adequate for diagonally dominant systems).
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, bw) = (self.n, self.bw);
        for k in 0..n {
            let pivot = self.data[self.slot(k, k)];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::LinearSolve(format!("zero pivot in banded system at row {k}")));
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let ik = self.slot(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..=last {
                    let kj = self.slot(k, j);
                    let ij = self.slot(i, j);
                    self.data[ij] -= l * self.data[kj];
                }
            }
        }
        Ok(BandedLu { m: self })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandedLu {
    m: BandedMatrix,
}

impl BandedLu {
    pub fn solve(&self, rhs: &mut [f64]) {
        let (n, bw) = (self.m.n, self.m.bw);
        for i in 0..n {
            let first = i.saturating_sub(bw);
            let mut acc = rhs[i];
            for j in first..i {
                acc -= self.m.data[self.m.slot(i, j)] * rhs[j];
            }
            rhs[i] = acc;
        }
        for i in (0..n).rev() {
            let last = (i + bw).min(n - 1);
            let mut acc = rhs[i];
            for j in i + 1..=last {
                acc -= self.m.data[self.m.slot(i, j)] * rhs[j];
            }
            rhs[i] = acc / self.m.data[self.m.slot(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_hand_solution() {
        // [2 1 0; 1 2 1; 0 1 2] x = [4 8 8] -> x = [1 2 3]
        let mut rhs = vec![4.0, 8.0, 8.0];
        solve_tridiagonal(&[0.0, 1.0, 1.0], &[2.0, 2.0, 2.0], &[1.0, 1.0, 0.0], &mut rhs).unwrap();
        for (v, e) in rhs.iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn banded_lu_agrees_with_thomas() {
        let n = 7;
        let mut m = BandedMatrix::zeros(n, 2);
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            m.add(i, i, 6.0 + i as f64);
            if i >= 2 {
                m.add(i, i - 2, -1.0);
            }
            if i + 2 < n {
                m.add(i, i + 2, -1.5);
            }
            rhs[i] = (i as f64).sin();
        }
        let x = {
            let mut r = rhs.clone();
            m.clone().factor().unwrap().solve(&mut r);
            r
        };
        for i in 0..n {
            let mut ax = (6.0 + i as f64) * x[i];
            if i >= 2 {
                ax -= x[i - 2];
            }
            if i + 2 < n {
                ax -= 1.5 * x[i + 2];
            }
            assert!((ax - rhs[i]).abs() < 1e-13);
        }
    }
}
