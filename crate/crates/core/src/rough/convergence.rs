use std::io::Write;

use crate::path::Partition;

/// Largest admissible ratio between the gaps of consecutive dyadic levels.
pub const SHRINK_THRESHOLD: f64 = 0.75;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelGap {
    pub level: u32,
    pub mesh: f64,
    pub gap: f64,
}

/// Per-level gaps of a refinement study.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceReport {
    pub entries: Vec<LevelGap>,
}

/// `gap_next / gap_prev` with `0/0 = 0`.
pub fn shrink_ratio(prev: f64, next: f64) -> f64 {
    if next == 0.0 {
        0.0
    } else if prev == 0.0 {
        f64::INFINITY
    } else {
        next / prev
    }
}

impl ConvergenceReport {
    pub fn push(&mut self, level: u32, mesh: f64, gap: f64) {
        self.entries.push(LevelGap { level, mesh, gap });
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.gap).collect()
    }

    pub fn shrink_factors(&self) -> Vec<f64> {
        self.entries
            .windows(2)
            .map(|w| shrink_ratio(w[0].gap, w[1].gap))
            .collect()
    }

    pub fn worst_shrink(&self) -> f64 {
        self.shrink_factors().into_iter().fold(0.0, f64::max)
    }

    pub fn converged(&self) -> bool {
        self.converged_with(SHRINK_THRESHOLD)
    }

    pub fn converged_with(&self, threshold: f64) -> bool {
        self.entries.len() >= 2 && self.shrink_factors().iter().all(|&r| r <= threshold)
    }

    /// Averages gap sequences over an ensemble of studies with identical levels.
    pub fn ensemble_mean(reports: &[ConvergenceReport]) -> ConvergenceReport {
        let Some(first) = reports.first() else {
            return ConvergenceReport::default();
        };
        let n = reports.len() as f64;
        let entries = first
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| LevelGap {
                level: e.level,
                mesh: e.mesh,
                gap: reports.iter().map(|r| r.entries[i].gap).sum::<f64>() / n,
            })
            .collect();
        ConvergenceReport { entries }
    }

    /// Writes the `level,mesh,gap` table, followed by a `WARN` row when not converged.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "level,mesh,gap")?;
        for e in &self.entries {
            writeln!(out, "{},{},{}", e.level, e.mesh, e.gap)?;
        }
        if !self.converged() {
            writeln!(
                out,
                "WARN,,worst shrink factor {} exceeds {SHRINK_THRESHOLD}",
                self.worst_shrink()
            )?;
        }
        Ok(())
    }
}

/// Running sums over the cells of `partition`, evaluated at every grid node.
///
/// `term(a, j, out)` writes the contribution of the cell starting at node `a`,
/// cut at node `j`, with `a < j <= b`. Row `0` of the result is zero.
pub(crate) fn running_sum(
    partition: &Partition,
    dim: usize,
    mut term: impl FnMut(usize, usize, &mut [f64]),
) -> Vec<f64> {
    let n = partition.grid_len();
    let mut data = vec![0.0; n * dim];
    let mut base = vec![0.0; dim];
    let mut cell = vec![0.0; dim];
    for (a, b) in partition.cells() {
        for j in a + 1..=b {
            term(a, j, &mut cell);
            let row = &mut data[j * dim..(j + 1) * dim];
            for i in 0..dim {
                row[i] = base[i] + cell[i];
            }
        }
        base.copy_from_slice(&data[b * dim..(b + 1) * dim]);
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_follow_conventions() {
        assert_eq!(shrink_ratio(0.0, 0.0), 0.0);
        assert_eq!(shrink_ratio(0.0, 1.0), f64::INFINITY);
        assert_eq!(shrink_ratio(2.0, 1.0), 0.5);
    }

    #[test]
    fn csv_has_warn_row_when_diverging() {
        let mut r = ConvergenceReport::default();
        r.push(1, 0.5, 1.0);
        r.push(2, 0.25, 0.9);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("level,mesh,gap\n1,0.5,1\n2,0.25,0.9\nWARN"));
    }

    #[test]
    fn running_sum_counts_partial_cells() {
        let part = Partition::stride(5, 2).unwrap();
        let data = running_sum(&part, 1, |a, j, out| out[0] = (j - a) as f64);
        assert_eq!(data, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }
}
