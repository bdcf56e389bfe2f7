use std::sync::Arc;

use super::convergence::{running_sum, ConvergenceReport};
use super::{ControlledPath, RoughLift};
use crate::path::{Partition, SampledPath};
use crate::{Error, Result};

fn partition_or_full(lift: &RoughLift, partition: Option<&Partition>) -> Result<Partition> {
    match partition {
        Some(p) => {
            p.check_fits(lift.grid())?;
            Ok(p.clone())
        }
        None => Ok(Partition::full(lift.len())),
    }
}

/// `∫ F dS` as running compensated Riemann sums `F_s·S_{s,t} + F'_s : A_{s,t}`.
///
/// The sums run over the cells of `partition` (every grid cell when `None`) and
/// are reported at every grid node, cutting the last cell at the node.
pub fn compensated_integral(f: &ControlledPath, partition: Option<&Partition>) -> Result<SampledPath> {
    let lift = f.lift();
    let d = lift.dim();
    if f.dim() != d {
        return Err(Error::Dimension(format!(
            "integrand of dimension {} against a {d}-dimensional path",
            f.dim()
        )));
    }
    let part = partition_or_full(lift, partition)?;
    let path = lift.path();
    let mut area = vec![0.0; d * d];
    let data = running_sum(&part, 1, |a, j, out| {
        lift.area_into(a, j, &mut area);
        let fa = f.value().value(a);
        let fp = f.derivative().value(a);
        let (sa, sj) = (path.value(a), path.value(j));
        let mut acc = 0.0;
        for i in 0..d {
            acc += fa[i] * (sj[i] - sa[i]);
            for k in 0..d {
                acc += fp[i * d + k] * area[k * d + i];
            }
        }
        out[0] = acc;
    });
    SampledPath::new(lift.grid().clone(), 1, data)
}

/// `∫ F dG = sum_i ∫ F^i dG^i` for two paths controlled by the same lift.
///
/// Cell term `F_s·G_{s,t} + sum_i (F'_s)_i A_{s,t} (G'_s)_i`.
pub fn controlled_integral(
    f: &ControlledPath,
    g: &ControlledPath,
    partition: Option<&Partition>,
) -> Result<SampledPath> {
    if !f.same_reference(g) {
        return Err(Error::ReferenceMismatch);
    }
    if f.dim() != g.dim() {
        return Err(Error::Dimension(format!(
            "integrand of dimension {} against integrator of dimension {}",
            f.dim(),
            g.dim()
        )));
    }
    let lift = f.lift();
    let d = lift.dim();
    let m = f.dim();
    let part = partition_or_full(lift, partition)?;
    let mut area = vec![0.0; d * d];
    let data = running_sum(&part, 1, |a, j, out| {
        lift.area_into(a, j, &mut area);
        let fa = f.value().value(a);
        let fp = f.derivative().value(a);
        let gp = g.derivative().value(a);
        let (ga, gj) = (g.value().value(a), g.value().value(j));
        let mut acc = 0.0;
        for i in 0..m {
            acc += fa[i] * (gj[i] - ga[i]);
            let frow = &fp[i * d..(i + 1) * d];
            let grow = &gp[i * d..(i + 1) * d];
            for (r, fr) in frow.iter().enumerate() {
                if *fr == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for (c, gc) in grow.iter().enumerate() {
                    inner += area[r * d + c] * gc;
                }
                acc += fr * inner;
            }
        }
        out[0] = acc;
    });
    SampledPath::new(lift.grid().clone(), 1, data)
}

fn check_same_grid(y: &SampledPath, g: &SampledPath) -> Result<()> {
    if y.grid() != g.grid() {
        return Err(Error::Dimension("integrand and integrator use different grids".into()));
    }
    if y.dim() != g.dim() {
        return Err(Error::Dimension(format!(
            "integrand of dimension {} against integrator of dimension {}",
            y.dim(),
            g.dim()
        )));
    }
    Ok(())
}

/// Classical left-point sums `sum Y_{t_k}·G_{t_k ∧ t, t_{k+1} ∧ t}` along one partition.
pub fn left_point_sum(y: &SampledPath, g: &SampledPath, partition: &Partition) -> Result<SampledPath> {
    check_same_grid(y, g)?;
    partition.check_fits(y.grid())?;
    let data = running_sum(partition, 1, |a, j, out| {
        out[0] = y
            .value(a)
            .iter()
            .zip(g.value(j).iter().zip(g.value(a)))
            .map(|(yv, (gj, ga))| yv * (gj - ga))
            .sum();
    });
    SampledPath::new(y.grid().clone(), 1, data)
}

/// Left-point sums on each level and the sup-distance between consecutive levels.
pub fn left_point_integral(
    y: &SampledPath,
    g: &SampledPath,
    partitions: &[Partition],
    labels: &[u32],
) -> Result<(Vec<SampledPath>, ConvergenceReport)> {
    if partitions.len() < 2 {
        return Err(Error::DiagnosticUnavailable(
            "need at least two partition levels".into(),
        ));
    }
    let sums = partitions
        .iter()
        .map(|p| left_point_sum(y, g, p))
        .collect::<Result<Vec<_>>>()?;
    let mut report = ConvergenceReport::default();
    for k in 1..sums.len() {
        let gap = sums[k].sup_distance(&sums[k - 1])?;
        report.push(labels[k], partitions[k].mesh(y.grid()), gap);
    }
    Ok((sums, report))
}

/// Riemann–Stieltjes sums `sum Y_s : A_{s,t}` against a finite-variation path.
pub fn young_integral(y: &SampledPath, a: &SampledPath, partition: Option<&Partition>) -> Result<SampledPath> {
    check_same_grid(y, a)?;
    let part = match partition {
        Some(p) => {
            p.check_fits(y.grid())?;
            p.clone()
        }
        None => Partition::full(y.len()),
    };
    left_point_sum(y, a, &part)
}

/// The lift of a controlled path `Z`: `∫ Z ⊗ dZ` from compensated sums.
///
/// Each cell contributes `Z_s ⊗ Z_{s,t} + Z'_s A_{s,t} Z'_s^T`.
pub fn canonical_lift_of_controlled(z: &ControlledPath, partition: Option<&Partition>) -> Result<RoughLift> {
    let lift = z.lift();
    let d = lift.dim();
    let m = z.dim();
    let part = partition_or_full(lift, partition)?;
    let mut area = vec![0.0; d * d];
    let data = running_sum(&part, m * m, |a, j, out| {
        lift.area_into(a, j, &mut area);
        let za = z.value().value(a);
        let zj = z.value().value(j);
        let zp = z.derivative().value(a);
        let mut left = vec![0.0; m * d];
        for r in 0..m {
            let row = &zp[r * d..(r + 1) * d];
            for c in 0..d {
                left[r * d + c] = (0..d).map(|k| row[k] * area[k * d + c]).sum::<f64>();
            }
        }
        for u in 0..m {
            for v in 0..m {
                let comp: f64 = (0..d).map(|c| left[u * d + c] * zp[v * d + c]).sum();
                out[u * m + v] = za[u] * (zj[v] - za[v]) + comp;
            }
        }
    });
    RoughLift::from_iterated(z.value().clone(), data, lift.p())
}

/// Convenience wrapper returning the integral as a controlled path with derivative `F`.
pub fn integral_as_controlled(f: &ControlledPath, g: &ControlledPath) -> Result<ControlledPath> {
    let value = controlled_integral(f, g, None)?;
    let d = f.lift().dim();
    let derivative = f.value().map(d, |k, fv| {
        let gp = g.derivative().value(k);
        (0..d)
            .map(|c| (0..fv.len()).map(|i| fv[i] * gp[i * d + c]).sum())
            .collect()
    })?;
    ControlledPath::new(value, derivative, Arc::clone(f.lift()))
}
