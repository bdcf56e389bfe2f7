use super::{Partition, TimeGrid};
use crate::{Error, Result};

/// Values of an `R^dim`-valued path at the nodes of a grid.
///
/// Between nodes the path is the linear interpolation of its samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledPath {
    grid: TimeGrid,
    dim: usize,
    data: Vec<f64>,
}

impl SampledPath {
    /// `data` holds the node values row by row.
    pub fn new(grid: TimeGrid, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("path dimension must be positive".into()));
        }
        if data.len() != grid.len() * dim {
            return Err(Error::Dimension(format!(
                "expected {} values for {} nodes of dimension {dim}, got {}",
                grid.len() * dim,
                grid.len(),
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value at node {}",
                k / dim
            )));
        }
        Ok(SampledPath { grid, dim, data })
    }

    pub fn from_rows(grid: TimeGrid, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(k) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Dimension(format!("row {k} has the wrong length")));
        }
        SampledPath::new(grid, dim, rows.concat())
    }

    /// Samples `f(t)` at every node.
    pub fn from_fn(grid: TimeGrid, dim: usize, mut f: impl FnMut(f64) -> Vec<f64>) -> Result<Self> {
        let mut data = Vec::with_capacity(grid.len() * dim);
        for &t in grid.times() {
            let v = f(t);
            if v.len() != dim {
                return Err(Error::Dimension(format!(
                    "function returned {} values, expected {dim}",
                    v.len()
                )));
            }
            data.extend_from_slice(&v);
        }
        SampledPath::new(grid, dim, data)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.value(self.len() - 1)
    }

    /// `S_{t_s, t_t}` for node indices.
    pub fn increment(&self, s: usize, t: usize) -> Vec<f64> {
        self.value(t)
            .iter()
            .zip(self.value(s))
            .map(|(b, a)| b - a)
            .collect()
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        self.data.iter().skip(i).step_by(self.dim).copied().collect()
    }

    /// Linear interpolation at an arbitrary time inside the grid.
    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let horizon = self.grid.horizon();
        if !(0.0..=horizon * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::Domain(format!("time {t} outside [0, {horizon}]")));
        }
        if let Some(k) = self.grid.locate(t) {
            return Ok(self.value(k).to_vec());
        }
        let k = self.grid.floor_index(t);
        let (t0, t1) = (self.grid.time(k), self.grid.time(k + 1));
        let w = (t - t0) / (t1 - t0);
        Ok(self
            .value(k)
            .iter()
            .zip(self.value(k + 1))
            .map(|(a, b)| a + w * (b - a))
            .collect())
    }

    /// The path sampled at the nodes of a partition of its grid.
    pub fn restrict(&self, partition: &Partition) -> Result<SampledPath> {
        partition.check_fits(&self.grid)?;
        let grid = self.grid.select(partition.nodes())?;
        let mut data = Vec::with_capacity(partition.len() * self.dim);
        for &k in partition.nodes() {
            data.extend_from_slice(self.value(k));
        }
        SampledPath::new(grid, self.dim, data)
    }

    /// The path up to and including node `last`.
    pub fn truncate(&self, last: usize) -> Result<SampledPath> {
        let grid = self.grid.truncate(last)?;
        SampledPath::new(grid, self.dim, self.data[..(last + 1) * self.dim].to_vec())
    }

    /// The path up to the last node not exceeding `horizon`.
    pub fn up_to(&self, horizon: f64) -> Result<SampledPath> {
        let last = self.grid.floor_index(horizon);
        if last + 1 == self.len() {
            return Ok(self.clone());
        }
        self.truncate(last)
    }

    /// The same path with `offset` subtracted from every sample.
    pub fn shifted(&self, offset: &[f64]) -> Result<SampledPath> {
        if offset.len() != self.dim {
            return Err(Error::Dimension("offset has the wrong length".into()));
        }
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(k, v)| v - offset[k % self.dim])
            .collect();
        SampledPath::new(self.grid.clone(), self.dim, data)
    }

    /// A path on the same grid with values produced node by node.
    pub fn map(&self, dim: usize, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Result<SampledPath> {
        let mut data = Vec::with_capacity(self.len() * dim);
        for k in 0..self.len() {
            let v = f(k, self.value(k));
            if v.len() != dim {
                return Err(Error::Dimension("mapped value has the wrong length".into()));
            }
            data.extend_from_slice(&v);
        }
        SampledPath::new(self.grid.clone(), dim, data)
    }

    /// Largest distance between the two paths over common nodes.
    pub fn sup_distance(&self, other: &SampledPath) -> Result<f64> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(Error::Dimension("paths live on different grids".into()));
        }
        Ok((0..self.len())
            .map(|k| crate::linalg::dist(self.value(k), other.value(k)))
            .fold(0.0, f64::max))
    }
}

/// Step path holding the left-node value on each cell and the terminal value at `T`.
#[derive(Clone, Debug)]
pub struct StepPath {
    grid: TimeGrid,
    dim: usize,
    data: Vec<f64>,
}

impl StepPath {
    pub fn eval(&self, t: f64) -> &[f64] {
        let k = self.grid.floor_index(t);
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// The step path sampled on another (finer) grid.
    pub fn sample_on(&self, grid: &TimeGrid) -> Result<SampledPath> {
        SampledPath::from_fn(grid.clone(), self.dim, |t| self.eval(t).to_vec())
    }
}

pub fn piecewise_constant_approx(path: &SampledPath, partition: &Partition) -> Result<StepPath> {
    let coarse = path.restrict(partition)?;
    Ok(StepPath {
        grid: coarse.grid.clone(),
        dim: coarse.dim,
        data: coarse.data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> SampledPath {
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        SampledPath::from_fn(grid, 2, |t| vec![t, 2.0 * t * t]).unwrap()
    }

    #[test]
    fn interpolates_between_nodes() {
        let p = line();
        let v = p.eval(0.125).unwrap();
        assert!((v[0] - 0.125).abs() < 1e-15);
        assert!((v[1] - 0.0625).abs() < 1e-15);
        assert!(p.eval(1.5).is_err());
    }

    #[test]
    fn step_path_holds_left_values() {
        let p = line();
        let part = Partition::stride(p.len(), 2).unwrap();
        let step = piecewise_constant_approx(&p, &part).unwrap();
        assert_eq!(step.eval(0.3), &[0.0, 0.0]);
        assert_eq!(step.eval(0.75), &[0.5, 0.5]);
        assert_eq!(step.eval(1.0), &[1.0, 2.0]);
    }

    #[test]
    fn rejects_wrong_shapes() {
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        assert!(SampledPath::new(grid.clone(), 2, vec![0.0; 5]).is_err());
        assert!(SampledPath::new(grid, 1, vec![0.0, f64::NAN, 1.0]).is_err());
    }
}
