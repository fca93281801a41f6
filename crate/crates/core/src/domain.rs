//! Model geometries, uniform space-time grids and grid-function containers.

use crate::error::{Error, Result};
use crate::fmt_f64;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
}

impl DomainSpec {
    pub fn interval(length: f64) -> Result<Self> {
        let d = DomainSpec::Interval { length };
        d.validate()?;
        Ok(d)
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self> {
        let d = DomainSpec::Rectangle { lx, ly };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths().iter().all(|l| l.is_finite() && *l > 0.0) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "domain lengths must be finite and positive, got {:?}",
                self.lengths()
            )))
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            DomainSpec::Rectangle { .. } => 2,
        }
    }

    pub fn lengths(&self) -> Vec<f64> {
        match *self {
            DomainSpec::Interval { length } => vec![length],
            DomainSpec::Rectangle { lx, ly } => vec![lx, ly],
        }
    }

    pub fn length(&self, axis: usize) -> f64 {
        self.lengths()[axis]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension() && x.iter().zip(self.lengths()).all(|(v, l)| (0.0..=l).contains(v))
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn boundary_measure(&self) -> f64 {
        match *self {
            DomainSpec::Interval { .. } => 2.0,
            DomainSpec::Rectangle { lx, ly } => 2.0 * (lx + ly),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub final_time: f64,
}

impl GridSpec {
    pub fn interval(nx: usize, nt: usize, final_time: f64) -> Self {
        GridSpec {
            nx,
            ny: 1,
            nt,
            final_time,
        }
    }

    pub fn rectangle(nx: usize, ny: usize, nt: usize, final_time: f64) -> Self {
        GridSpec { nx, ny, nt, final_time }
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.nt as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.nt {
            self.final_time
        } else {
            k as f64 * self.dt()
        }
    }

    /// Same grid with space and time steps halved.
    pub fn refined(&self) -> Self {
        GridSpec {
            nx: 2 * self.nx - 1,
            ny: if self.ny > 1 { 2 * self.ny - 1 } else { 1 },
            nt: 2 * self.nt,
            final_time: self.final_time,
        }
    }
}

/// A node on Γ with its outward unit normal. Rectangle corners appear once
/// per adjacent edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub node: usize,
    pub normal: [f64; 2],
    /// Axis the normal is aligned with.
    pub axis: usize,
    /// Trapezoid weight of the node on its edge (1 for interval endpoints).
    pub weight: f64,
}

impl BoundaryPoint {
    /// `+1` when the normal points along the positive axis direction.
    pub fn orientation(&self) -> f64 {
        self.normal[self.axis].signum()
    }
}

#[derive(Debug, Clone)]
pub struct GridIndex {
    pub domain: DomainSpec,
    pub spec: GridSpec,
    pub spacing: [f64; 2],
    coords: Vec<[f64; 2]>,
    boundary_mask: Vec<bool>,
    pub boundary: Vec<BoundaryPoint>,
    pub times: Vec<f64>,
}

pub fn build_grid(domain: DomainSpec, spec: GridSpec) -> Result<GridIndex> {
    domain.validate()?;
    let two_d = domain.dimension() == 2;
    if spec.nx < 3 || (two_d && spec.ny < 3) {
        return Err(Error::InvalidInput(format!(
            "grid needs at least 3 points per axis, got nx = {}, ny = {}",
            spec.nx, spec.ny
        )));
    }
    if spec.nt < 2 {
        return Err(Error::InvalidInput(format!(
            "grid needs at least 2 time steps, got {}",
            spec.nt
        )));
    }
    if !(spec.final_time.is_finite() && spec.final_time > 0.0) {
        return Err(Error::InvalidInput(format!(
            "final time must be positive, got {}",
            spec.final_time
        )));
    }
    let spec = GridSpec {
        ny: if two_d { spec.ny } else { 1 },
        ..spec
    };
    let lengths = domain.lengths();
    let hx = lengths[0] / (spec.nx - 1) as f64;
    let hy = if two_d { lengths[1] / (spec.ny - 1) as f64 } else { 0.0 };
    let (nx, ny) = (spec.nx, spec.ny);
    let mut coords = Vec::with_capacity(nx * ny);
    let mut boundary_mask = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            coords.push([i as f64 * hx, j as f64 * hy]);
            let on_x = i == 0 || i == nx - 1;
            let on_y = two_d && (j == 0 || j == ny - 1);
            boundary_mask.push(on_x || on_y);
        }
    }
    let mut boundary = Vec::new();
    if two_d {
        let edge = |out: &mut Vec<BoundaryPoint>, nodes: Vec<usize>, axis: usize, sign: f64, h: f64| {
            let last = nodes.len() - 1;
            for (k, node) in nodes.into_iter().enumerate() {
                let mut normal = [0.0; 2];
                normal[axis] = sign;
                let weight = if k == 0 || k == last { 0.5 * h } else { h };
                out.push(BoundaryPoint {
                    node,
                    normal,
                    axis,
                    weight,
                });
            }
        };
        edge(&mut boundary, (0..ny).map(|j| j * nx).collect(), 0, -1.0, hy);
        edge(&mut boundary, (0..ny).map(|j| j * nx + nx - 1).collect(), 0, 1.0, hy);
        edge(&mut boundary, (0..nx).collect(), 1, -1.0, hx);
        edge(&mut boundary, (0..nx).map(|i| (ny - 1) * nx + i).collect(), 1, 1.0, hx);
    } else {
        for (node, sign) in [(0, -1.0), (nx - 1, 1.0)] {
            boundary.push(BoundaryPoint {
                node,
                normal: [sign, 0.0],
                axis: 0,
                weight: 1.0,
            });
        }
    }
    let times = (0..=spec.nt).map(|k| spec.time(k)).collect();
    Ok(GridIndex {
        domain,
        spec,
        spacing: [hx, hy],
        coords,
        boundary_mask,
        boundary,
        times,
    })
}

impl GridIndex {
    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn n_times(&self) -> usize {
        self.spec.nt + 1
    }

    pub fn dt(&self) -> f64 {
        self.spec.dt()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * self.spec.nx + i
    }

    /// Axis indices `(i, j)` of a node.
    pub fn axis_indices(&self, node: usize) -> (usize, usize) {
        (node % self.spec.nx, node / self.spec.nx)
    }

    /// Coordinates of a node as a slice of length `dimension()`.
    pub fn coords(&self, node: usize) -> &[f64] {
        &self.coords[node][..self.dimension()]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_mask[node]
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_nodes()).filter(|&n| !self.boundary_mask[n])
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_nodes()).filter(|&n| self.boundary_mask[n])
    }

    /// Position in `boundary` of the point at `node` with the given normal
    /// axis and orientation, if any.
    pub fn find_boundary_point(&self, node: usize, axis: usize, orientation: f64) -> Option<usize> {
        self.boundary
            .iter()
            .position(|b| b.node == node && b.axis == axis && b.orientation() == orientation)
    }

    /// Node reached from `node` by `steps` grid steps along `axis`.
    pub fn step(&self, node: usize, axis: usize, steps: isize) -> usize {
        let stride = if axis == 0 { 1 } else { self.spec.nx as isize };
        (node as isize + steps * stride) as usize
    }
}

/// Time sampling mode for [`sample_function`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleTimes {
    /// Evaluate once at `t = 0` and repeat on every level.
    Static,
    /// Evaluate on every grid time level.
    Grid,
}

/// Values on all nodes and time levels, stored level by level.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    n_nodes: usize,
    n_times: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &GridIndex) -> Self {
        GridFunction {
            n_nodes: grid.n_nodes(),
            n_times: grid.n_times(),
            values: vec![0.0; grid.n_nodes() * grid.n_times()],
        }
    }

    pub fn from_values(grid: &GridIndex, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() * grid.n_times() {
            return Err(Error::InvalidInput(format!(
                "expected {} values, got {}",
                grid.n_nodes() * grid.n_times(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            let node = k % grid.n_nodes();
            return Err(Error::NonFiniteSample {
                node,
                coords: grid.coords(node).to_vec(),
                t: grid.times[k / grid.n_nodes()],
                value: values[k],
            });
        }
        Ok(GridFunction {
            n_nodes: grid.n_nodes(),
            n_times: grid.n_times(),
            values,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn get(&self, node: usize, k: usize) -> f64 {
        self.values[k * self.n_nodes + node]
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_nodes..(k + 1) * self.n_nodes]
    }

    pub fn level_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.n_nodes..(k + 1) * self.n_nodes]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Sup-norm distance to another grid function on the same grid.
    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// CSV dump with columns `x[,y],t,value`, one row per node and level.
    pub fn write_csv<W: Write>(&self, grid: &GridIndex, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x"];
        if grid.dimension() == 2 {
            header.push("y");
        }
        header.extend(["t", "value"]);
        w.write_record(&header)?;
        for k in 0..self.n_times {
            for node in 0..self.n_nodes {
                let mut row: Vec<String> = grid.coords(node).iter().map(|v| fmt_f64(*v)).collect();
                row.push(fmt_f64(grid.times[k]));
                row.push(fmt_f64(self.get(node, k)));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Sample a scalar field at every node (and time level, for [`SampleTimes::Grid`]).
pub fn sample_function(
    expr: &dyn Fn(&[f64], f64) -> f64,
    grid: &GridIndex,
    times: SampleTimes,
) -> Result<GridFunction> {
    let n = grid.n_nodes();
    let mut values = Vec::with_capacity(n * grid.n_times());
    let levels = match times {
        SampleTimes::Static => 1,
        SampleTimes::Grid => grid.n_times(),
    };
    for k in 0..levels {
        let t = grid.times[k];
        for node in 0..n {
            let x = grid.coords(node);
            let v = expr(x, t);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    node,
                    coords: x.to_vec(),
                    t,
                    value: v,
                });
            }
            values.push(v);
        }
    }
    if times == SampleTimes::Static {
        let first = values.clone();
        for _ in 1..grid.n_times() {
            values.extend_from_slice(&first);
        }
    }
    Ok(GridFunction {
        n_nodes: n,
        n_times: grid.n_times(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corner_weights_sum_to_perimeter() {
        let g = build_grid(
            DomainSpec::rectangle(2.0, 1.0).unwrap(),
            GridSpec::rectangle(5, 3, 2, 1.0),
        )
        .unwrap();
        let total: f64 = g.boundary.iter().map(|b| b.weight).sum();
        assert!((total - 6.0).abs() < 1e-14);
        assert_eq!(g.boundary.len(), 2 * 3 + 2 * 5);
    }

    #[test]
    fn static_sampling_repeats_levels() {
        let g = build_grid(DomainSpec::interval(1.0).unwrap(), GridSpec::interval(3, 2, 1.0)).unwrap();
        let f = sample_function(&|x, _| x[0], &g, SampleTimes::Static).unwrap();
        assert_eq!(f.level(2), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_nonpositive_lengths() {
        assert!(DomainSpec::interval(0.0).is_err());
        assert!(DomainSpec::rectangle(1.0, -1.0).is_err());
    }
}
