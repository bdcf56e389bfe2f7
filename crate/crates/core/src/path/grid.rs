use std::sync::Arc;

use crate::{Error, Result};

/// Strictly increasing time nodes starting at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    times: Arc<[f64]>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least two nodes, got {}",
                times.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "first node must be 0, got {}",
                times[0]
            )));
        }
        for (k, w) in times.windows(2).enumerate() {
            if !w[1].is_finite() || w[1] <= w[0] {
                return Err(Error::InvalidGrid(format!(
                    "nodes {k} and {} are not strictly increasing ({} then {})",
                    k + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(TimeGrid {
            times: times.into(),
        })
    }

    /// `steps + 1` equally spaced nodes on `[0, horizon]`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("need at least one step".into()));
        }
        let n = steps as f64;
        let times = (0..=steps).map(|k| horizon * (k as f64) / n).collect();
        TimeGrid::new(times)
    }

    /// The level-`level` dyadic grid with `2^level` cells.
    pub fn dyadic(horizon: f64, level: u32) -> Result<Self> {
        TimeGrid::uniform(horizon, 1usize << level)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn mesh(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    fn tolerance(&self) -> f64 {
        1e-12 * self.horizon().max(1.0)
    }

    /// Index of the node equal to `t` up to a relative tolerance.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let tol = self.tolerance();
        let k = self.times.partition_point(|&s| s < t - tol);
        (k < self.len() && (self.times[k] - t).abs() <= tol).then_some(k)
    }

    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.locate(t).ok_or(Error::GridAlignment(t))
    }

    /// Largest node index with `t_k <= t`, clamped to the grid.
    pub fn floor_index(&self, t: f64) -> usize {
        let tol = self.tolerance();
        let k = self.times.partition_point(|&s| s <= t + tol);
        k.saturating_sub(1)
    }

    /// The grid cut at node `last` (inclusive).
    pub fn truncate(&self, last: usize) -> Result<TimeGrid> {
        if last == 0 || last >= self.len() {
            return Err(Error::InvalidGrid(format!(
                "cannot truncate a {}-node grid at node {last}",
                self.len()
            )));
        }
        TimeGrid::new(self.times[..=last].to_vec())
    }

    /// The sub-grid formed by the given node indices.
    pub fn select(&self, nodes: &[usize]) -> Result<TimeGrid> {
        TimeGrid::new(nodes.iter().map(|&k| self.times[k]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.1, 0.2]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.4]).is_err());
    }

    #[test]
    fn dyadic_levels_share_nodes_exactly() {
        let coarse = TimeGrid::dyadic(3.7, 4).unwrap();
        let fine = TimeGrid::dyadic(3.7, 7).unwrap();
        for (k, &t) in coarse.times().iter().enumerate() {
            assert_eq!(fine.time(8 * k), t);
        }
    }

    #[test]
    fn locate_and_floor() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        assert_eq!(g.locate(0.5), Some(2));
        assert_eq!(g.locate(0.3), None);
        assert!(matches!(g.index_of(0.3), Err(Error::GridAlignment(_))));
        assert_eq!(g.floor_index(0.3), 1);
        assert_eq!(g.floor_index(1.0), 4);
        assert_eq!(g.floor_index(7.0), 4);
        assert_eq!(g.mesh(), 0.25);
    }
}
