use super::TimeGrid;
use crate::{Error, Result};

/// A partition of `[0, T]` given as increasing node indices of a fine grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    nodes: Vec<usize>,
    grid_len: usize,
}

impl Partition {
    /// Every node of a grid with `grid_len` nodes.
    pub fn full(grid_len: usize) -> Partition {
        Partition {
            nodes: (0..grid_len).collect(),
            grid_len,
        }
    }

    /// Every `stride`-th node; `stride` must divide the number of cells.
    pub fn stride(grid_len: usize, stride: usize) -> Result<Partition> {
        if stride == 0 || grid_len < 2 || (grid_len - 1) % stride != 0 {
            return Err(Error::NotNested(format!(
                "stride {stride} does not divide the {} cells of the grid",
                grid_len.saturating_sub(1)
            )));
        }
        Ok(Partition {
            nodes: (0..grid_len).step_by(stride).collect(),
            grid_len,
        })
    }

    pub fn from_nodes(nodes: Vec<usize>, grid_len: usize) -> Result<Partition> {
        if nodes.len() < 2 || nodes[0] != 0 || *nodes.last().unwrap() + 1 != grid_len {
            return Err(Error::NotNested(
                "a partition must start at the first node and end at the last".into(),
            ));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NotNested("partition nodes must increase".into()));
        }
        Ok(Partition { nodes, grid_len })
    }

    /// Locates every node of `coarse` on `fine`.
    pub fn from_grid(coarse: &TimeGrid, fine: &TimeGrid) -> Result<Partition> {
        if (coarse.horizon() - fine.horizon()).abs() > 1e-12 * fine.horizon().max(1.0) {
            return Err(Error::NotNested(format!(
                "horizons differ: {} vs {}",
                coarse.horizon(),
                fine.horizon()
            )));
        }
        let nodes = coarse
            .times()
            .iter()
            .map(|&t| fine.locate(t).ok_or_else(|| Error::NotNested(format!("node {t} is not on the fine grid"))))
            .collect::<Result<Vec<_>>>()?;
        Partition::from_nodes(nodes, fine.len())
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    /// Consecutive `(left, right)` node pairs.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn mesh(&self, grid: &TimeGrid) -> f64 {
        self.cells()
            .map(|(a, b)| grid.time(b) - grid.time(a))
            .fold(0.0, f64::max)
    }

    pub fn check_fits(&self, grid: &TimeGrid) -> Result<()> {
        if self.grid_len != grid.len() {
            return Err(Error::NotNested(format!(
                "partition built for {} nodes used on a {}-node grid",
                self.grid_len,
                grid.len()
            )));
        }
        Ok(())
    }

    /// Whether every node of `self` is also a node of `finer`.
    pub fn is_refined_by(&self, finer: &Partition) -> bool {
        self.grid_len == finer.grid_len
            && self
                .nodes
                .iter()
                .all(|k| finer.nodes.binary_search(k).is_ok())
    }
}

/// Nested partitions whose mesh at least halves from one level to the next.
#[derive(Clone, Debug)]
pub struct PartitionSequence {
    levels: Vec<TimeGrid>,
    labels: Vec<u32>,
}

impl PartitionSequence {
    pub fn new(levels: Vec<TimeGrid>, labels: Vec<u32>) -> Result<Self> {
        if levels.is_empty() || labels.len() != levels.len() {
            return Err(Error::Parameter("need one label per partition level".into()));
        }
        for (k, pair) in levels.windows(2).enumerate() {
            let (coarse, fine) = (&pair[0], &pair[1]);
            Partition::from_grid(coarse, fine)
                .map_err(|e| Error::NotNested(format!("level {} -> {}: {e}", k, k + 1)))?;
            if fine.mesh() > 0.5 * coarse.mesh() * (1.0 + 1e-12) {
                return Err(Error::MeshNotHalving(format!(
                    "level {} has mesh {} against {} at the previous level",
                    k + 1,
                    fine.mesh(),
                    coarse.mesh()
                )));
            }
        }
        Ok(PartitionSequence { levels, labels })
    }

    /// Dyadic levels `from..=to` on `[0, horizon]`.
    pub fn dyadic(horizon: f64, from: u32, to: u32) -> Result<Self> {
        if from > to || to > 30 {
            return Err(Error::Parameter(format!("bad dyadic level range {from}..={to}")));
        }
        let levels = (from..=to)
            .map(|n| TimeGrid::dyadic(horizon, n))
            .collect::<Result<Vec<_>>>()?;
        PartitionSequence::new(levels, (from..=to).collect())
    }

    pub fn levels(&self) -> &[TimeGrid] {
        &self.levels
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn finest(&self) -> &TimeGrid {
        self.levels.last().unwrap()
    }

    /// Each level as a partition of `fine`.
    pub fn partitions_of(&self, fine: &TimeGrid) -> Result<Vec<Partition>> {
        self.levels
            .iter()
            .map(|g| Partition::from_grid(g, fine))
            .collect()
    }
}

/// Dyadic sub-partitions of a grid with `2^level_max + 1` nodes.
pub fn dyadic_partitions(grid: &TimeGrid, levels: std::ops::RangeInclusive<u32>) -> Result<Vec<Partition>> {
    let cells = grid.len() - 1;
    if !cells.is_power_of_two() {
        return Err(Error::NotNested(format!("{cells} cells is not a power of two")));
    }
    let top = cells.trailing_zeros();
    levels
        .map(|n| {
            if n > top {
                return Err(Error::NotNested(format!("level {n} is finer than the grid")));
            }
            Partition::stride(grid.len(), 1usize << (top - n))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_sequence_is_nested() {
        let seq = PartitionSequence::dyadic(2.0, 2, 6).unwrap();
        let fine = seq.finest().clone();
        let parts = seq.partitions_of(&fine).unwrap();
        for w in parts.windows(2) {
            assert!(w[0].is_refined_by(&w[1]));
        }
        assert_eq!(parts[0].len(), 5);
    }

    #[test]
    fn non_nested_levels_rejected() {
        let a = TimeGrid::uniform(1.0, 3).unwrap();
        let b = TimeGrid::uniform(1.0, 8).unwrap();
        assert!(matches!(
            PartitionSequence::new(vec![a, b], vec![0, 1]),
            Err(Error::NotNested(_))
        ));
    }

    #[test]
    fn slow_refinement_rejected() {
        let a = TimeGrid::uniform(1.0, 2).unwrap();
        let b = TimeGrid::new(vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        assert!(matches!(
            PartitionSequence::new(vec![a, b], vec![0, 1]),
            Err(Error::MeshNotHalving(_))
        ));
    }
}
