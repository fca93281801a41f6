//! Neumann trace `∂_ν u` and its time derivative on `Σ = Γ × [0, T]`.

use crate::domain::{BoundaryPoint, GridFunction, GridIndex};
use crate::error::{Error, Result};
use crate::fmt_f64;
use std::io::{Read, Write};

/// `∂_ν u` and `∂_t ∂_ν u` at every boundary point and time level, stored
/// time-major. Both stencils are second order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeumannRecord {
    pub points: Vec<BoundaryPoint>,
    pub coords: Vec<Vec<f64>>,
    pub times: Vec<f64>,
    pub dnu: Vec<f64>,
    pub dt_dnu: Vec<f64>,
    pub order: usize,
}

/// Second-order derivative of equally spaced samples: centred inside,
/// one-sided at both ends.
pub(crate) fn time_derivative(values: &[f64], dt: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    for k in 1..n - 1 {
        out[k] = (values[k + 1] - values[k - 1]) / (2.0 * dt);
    }
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt);
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt);
    out
}

/// Outward derivative `(3u_b − 4u_{b−1} + u_{b−2}) / (2h)` of one level.
pub(crate) fn outward_derivative(grid: &GridIndex, level: &[f64], b: &BoundaryPoint) -> f64 {
    let inward = -(b.orientation() as isize);
    let n1 = grid.step(b.node, b.axis, inward);
    let n2 = grid.step(b.node, b.axis, 2 * inward);
    (3.0 * level[b.node] - 4.0 * level[n1] + level[n2]) / (2.0 * grid.spacing[b.axis])
}

pub fn neumann_trace(u: &GridFunction, grid: &GridIndex) -> Result<NeumannRecord> {
    if u.n_nodes() != grid.n_nodes() || u.n_times() != grid.n_times() {
        return Err(Error::InvalidInput("grid function does not match the grid".into()));
    }
    if grid.spec.nx < 3 || (grid.dimension() == 2 && grid.spec.ny < 3) {
        return Err(Error::InvalidInput("the trace stencil needs 3 nodes per axis".into()));
    }
    let nb = grid.boundary.len();
    let nt = grid.n_times();
    let mut dnu = Vec::with_capacity(nb * nt);
    for k in 0..nt {
        let level = u.level(k);
        dnu.extend(grid.boundary.iter().map(|b| outward_derivative(grid, level, b)));
    }
    let mut record = NeumannRecord {
        points: grid.boundary.clone(),
        coords: grid.boundary.iter().map(|b| grid.coords(b.node).to_vec()).collect(),
        times: grid.times.clone(),
        dnu,
        dt_dnu: Vec::new(),
        order: 2,
    };
    record.recompute_time_derivative();
    Ok(record)
}

impl NeumannRecord {
    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn dnu(&self, point: usize, k: usize) -> f64 {
        self.dnu[k * self.points.len() + point]
    }

    pub fn dt_dnu(&self, point: usize, k: usize) -> f64 {
        self.dt_dnu[k * self.points.len() + point]
    }

    /// Trace history at one boundary point.
    pub fn dnu_series(&self, point: usize) -> Vec<f64> {
        (0..self.n_times()).map(|k| self.dnu(point, k)).collect()
    }

    pub fn dt_dnu_series(&self, point: usize) -> Vec<f64> {
        (0..self.n_times()).map(|k| self.dt_dnu(point, k)).collect()
    }

    /// Rebuild `∂_t ∂_ν u` from `∂_ν u`.
    pub fn recompute_time_derivative(&mut self) {
        let nb = self.points.len();
        let nt = self.times.len();
        let dt = (self.times[nt - 1] - self.times[0]) / (nt - 1) as f64;
        self.dt_dnu = vec![0.0; nb * nt];
        for b in 0..nb {
            let d = time_derivative(&self.dnu_series(b), dt);
            for (k, v) in d.into_iter().enumerate() {
                self.dt_dnu[k * nb + b] = v;
            }
        }
    }

    /// `‖∂_t ∂_ν u − ∂_t ∂_ν v‖_{L∞(Σ)}` over the samples.
    pub fn sup_dt_gap(&self, other: &NeumannRecord) -> Result<f64> {
        if self.dt_dnu.len() != other.dt_dnu.len() {
            return Err(Error::InvalidInput("records have different shapes".into()));
        }
        Ok(self
            .dt_dnu
            .iter()
            .zip(&other.dt_dnu)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// CSV rows `boundary_id, x[, y], t, dnu_u, dt_dnu_u`; `boundary_id` is the
    /// position in the grid's boundary list, so corners appear once per edge.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let dim = self.coords.first().map_or(1, |c| c.len());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["boundary_id", "x"];
        if dim == 2 {
            header.push("y");
        }
        header.extend(["t", "dnu_u", "dt_dnu_u"]);
        w.write_record(&header)?;
        for k in 0..self.n_times() {
            for b in 0..self.n_points() {
                let mut row = vec![b.to_string()];
                row.extend(self.coords[b].iter().map(|&c| fmt_f64(c)));
                row.push(fmt_f64(self.times[k]));
                row.push(fmt_f64(self.dnu(b, k)));
                row.push(fmt_f64(self.dt_dnu(b, k)));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Read a record written by [`NeumannRecord::write_csv`] and check that it
    /// lines up with `grid`.
    pub fn read_csv<R: Read>(grid: &GridIndex, input: R) -> Result<Self> {
        let dim = grid.dimension();
        let nb = grid.boundary.len();
        let nt = grid.n_times();
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader.headers()?.clone();
        let expected: Vec<&str> = if dim == 2 {
            vec!["boundary_id", "x", "y", "t", "dnu_u", "dt_dnu_u"]
        } else {
            vec!["boundary_id", "x", "t", "dnu_u", "dt_dnu_u"]
        };
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Format(format!(
                "expected columns {expected:?}, found {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut dnu = vec![f64::NAN; nb * nt];
        let mut dt_dnu = vec![f64::NAN; nb * nt];
        let parse = |s: &str, line: u64| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("line {line}: cannot parse '{s}' as a number")))
        };
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let id: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {line}: bad boundary_id '{}'", &rec[0])))?;
            if id >= nb {
                return Err(Error::Format(format!(
                    "line {line}: boundary_id {id} out of range (grid has {nb} boundary points)"
                )));
            }
            let node = grid.boundary[id].node;
            for a in 0..dim {
                let c = parse(&rec[1 + a], line)?;
                if !close(c, grid.coords(node)[a]) {
                    return Err(Error::Format(format!(
                        "line {line}: coordinate {c} does not match boundary point {id}"
                    )));
                }
            }
            let t = parse(&rec[1 + dim], line)?;
            let k = grid
                .times
                .iter()
                .position(|&s| close(t, s))
                .ok_or_else(|| Error::Format(format!("line {line}: time {t} is not a grid time")))?;
            dnu[k * nb + id] = parse(&rec[2 + dim], line)?;
            dt_dnu[k * nb + id] = parse(&rec[3 + dim], line)?;
        }
        if let Some(i) = dnu.iter().chain(&dt_dnu).position(|v| !v.is_finite()) {
            let i = i % (nb * nt);
            return Err(Error::Format(format!(
                "missing or non-finite value for boundary point {} at t = {}",
                i % nb,
                grid.times[i / nb]
            )));
        }
        Ok(NeumannRecord {
            points: grid.boundary.clone(),
            coords: grid.boundary.iter().map(|b| grid.coords(b.node).to_vec()).collect(),
            times: grid.times.clone(),
            dnu,
            dt_dnu,
            order: 2,
        })
    }
}
