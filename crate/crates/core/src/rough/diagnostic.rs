use super::convergence::{running_sum, ConvergenceReport, SHRINK_THRESHOLD};
use super::RoughLift;
use crate::linalg::{dist, norm};
use crate::path::pvar::pvar_dp_prefixes;
use crate::path::{Partition, PartitionSequence, SampledPath};
use crate::{Error, Result};

/// Levels with more nodes than this are left out of the κ computation.
pub const KAPPA_MAX_NODES: usize = 257;

/// Running `∫ S^n ⊗ dS` along one partition, reported at every grid node.
fn riemann_path(path: &SampledPath, partition: &Partition) -> Vec<f64> {
    let d = path.dim();
    running_sum(partition, d * d, |a, j, out| {
        let (sa, sj) = (path.value(a), path.value(j));
        for i in 0..d {
            for k in 0..d {
                out[i * d + k] = sa[i] * (sj[k] - sa[k]);
            }
        }
    })
}

fn sup_gap(a: &[f64], b: &[f64], width: usize) -> f64 {
    a.chunks(width)
        .zip(b.chunks(width))
        .map(|(x, y)| dist(x, y))
        .fold(0.0, f64::max)
}

fn levels_on(path: &SampledPath, seq: &PartitionSequence) -> Result<(SampledPath, Vec<Partition>)> {
    if seq.len() < 2 {
        return Err(Error::DiagnosticUnavailable(
            "need at least two partition levels".into(),
        ));
    }
    let parts = seq.partitions_of(path.grid())?;
    let finest = path.restrict(parts.last().unwrap())?;
    let parts = seq.partitions_of(finest.grid())?;
    Ok((finest, parts))
}

fn gap_report(path: &SampledPath, parts: &[Partition], labels: &[u32]) -> ConvergenceReport {
    let d = path.dim();
    let sums: Vec<Vec<f64>> = parts.iter().map(|p| riemann_path(path, p)).collect();
    let mut report = ConvergenceReport::default();
    for k in 1..sums.len() {
        report.push(
            labels[k],
            parts[k].mesh(path.grid()),
            sup_gap(&sums[k], &sums[k - 1], d * d),
        );
    }
    report
}

/// The left-point lift on the finest level, with gaps between consecutive levels.
pub fn lift_via_left_point(
    path: &SampledPath,
    seq: &PartitionSequence,
    p: f64,
) -> Result<(RoughLift, ConvergenceReport)> {
    let (finest, parts) = levels_on(path, seq)?;
    let report = gap_report(&finest, &parts, seq.labels());
    let lift = RoughLift::left_point(finest, p)?;
    Ok((lift, report))
}

/// Outcome of the Riemann-sum integrability diagnostic.
#[derive(Clone, Debug)]
pub struct RieReport {
    pub convergence: ConvergenceReport,
    /// Smallest scale making both control ratios at most one.
    pub kappa: f64,
    pub kappa_levels: Vec<u32>,
    pub converged: bool,
}

impl RieReport {
    pub fn warning(&self) -> Option<String> {
        (!self.converged).then(|| {
            format!(
                "left-point sums did not settle: worst shrink factor {} exceeds {SHRINK_THRESHOLD}",
                self.convergence.worst_shrink()
            )
        })
    }
}

/// Gaps of successive Riemann-sum lifts plus the control scale `κ`.
///
/// For every level with at most [`KAPPA_MAX_NODES`] nodes, `c_0(s,t)` is the
/// p-variation of `S` plus the `p/2`-variation of the level's discrete area,
/// both over the level's own nodes in `[s,t]`; `κ` is the larger of
/// `sup |S_{s,t}|^p / c_0` and `sup |A^n_{s,t}|^{p/2} / c_0`, with `0/0 = 0`.
pub fn rie_diagnostic(path: &SampledPath, seq: &PartitionSequence, p: f64) -> Result<RieReport> {
    if !(2.0..3.0).contains(&p) {
        return Err(Error::Parameter(format!("p must lie in [2, 3), got {p}")));
    }
    let (finest, parts) = levels_on(path, seq)?;
    let convergence = gap_report(&finest, &parts, seq.labels());
    let mut kappa = 0.0_f64;
    let mut kappa_levels = Vec::new();
    for (part, &label) in parts.iter().zip(seq.labels()) {
        if part.len() > KAPPA_MAX_NODES {
            continue;
        }
        kappa_levels.push(label);
        let level = finest.restrict(part)?;
        kappa = kappa.max(level_kappa(&level, p));
    }
    let converged = convergence.converged();
    Ok(RieReport {
        convergence,
        kappa,
        kappa_levels,
        converged,
    })
}

fn level_kappa(level: &SampledPath, p: f64) -> f64 {
    let lift = RoughLift::left_point(level.clone(), p).expect("p checked by caller");
    let n = level.len();
    let half = p / 2.0;
    let mut worst = 0.0_f64;
    for s in 0..n - 1 {
        let pv = pvar_dp_prefixes(n - s, p, |i, j| dist(level.value(s + i), level.value(s + j)));
        let av = pvar_dp_prefixes(n - s, half, |i, j| norm(&lift.area(s + i, s + j)));
        for t in s + 1..n {
            let c0 = pv[t - s] + av[t - s];
            let x = dist(level.value(s), level.value(t)).powf(p);
            let a = norm(&lift.area(s, t)).powf(half);
            for num in [x, a] {
                let ratio = if num == 0.0 { 0.0 } else { num / c0 };
                worst = worst.max(ratio);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::TimeGrid;

    #[test]
    fn linear_path_gaps_halve() {
        let seq = PartitionSequence::dyadic(1.0, 2, 8).unwrap();
        let path = SampledPath::from_fn(seq.finest().clone(), 1, |t| vec![t]).unwrap();
        let (lift, report) = lift_via_left_point(&path, &seq, 2.5).unwrap();
        assert!((lift.area(0, lift.len() - 1)[0] - 0.5 * (1.0 - 1.0 / 256.0)).abs() < 1e-14);
        for r in report.shrink_factors() {
            assert!((r - 0.5).abs() < 1e-12);
        }
        assert!(report.converged());
    }

    #[test]
    fn single_level_is_unavailable() {
        let seq = PartitionSequence::dyadic(1.0, 3, 3).unwrap();
        let path = SampledPath::from_fn(TimeGrid::dyadic(1.0, 3).unwrap(), 1, |t| vec![t]).unwrap();
        assert!(matches!(
            lift_via_left_point(&path, &seq, 2.5),
            Err(Error::DiagnosticUnavailable(_))
        ));
    }

    #[test]
    fn kappa_is_at_most_one() {
        let seq = PartitionSequence::dyadic(1.0, 3, 6).unwrap();
        let path = SampledPath::from_fn(seq.finest().clone(), 2, |t| {
            vec![(13.0 * t).sin(), (7.0 * t).cos()]
        })
        .unwrap();
        let r = rie_diagnostic(&path, &seq, 2.5).unwrap();
        assert!(r.kappa > 0.0 && r.kappa <= 1.0 + 1e-12);
        assert_eq!(r.kappa_levels, vec![3, 4, 5, 6]);
    }
}
