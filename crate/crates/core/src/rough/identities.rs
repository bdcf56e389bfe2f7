use std::sync::Arc;

use super::convergence::ConvergenceReport;
use super::integrate::{
    canonical_lift_of_controlled, compensated_integral, controlled_integral, integral_as_controlled,
    left_point_sum, young_integral,
};
use super::{ControlledPath, RoughLift};
use crate::linalg::outer;
use crate::path::{Partition, SampledPath};
use crate::{Error, Result};

/// Probability weights on a finite index set.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Mixture("no atoms".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Mixture(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Mixture(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Mixture("no atoms".into()));
        }
        Ok(DiscreteMeasure {
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A twice differentiable function `R^m -> R` with analytic derivatives.
pub trait SmoothFunction {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    /// Row-major `m x m` Hessian.
    fn hessian(&self, x: &[f64]) -> Vec<f64>;
}

/// A [`SmoothFunction`] assembled from three closures.
pub struct FnSmooth<F, G, H> {
    pub value: F,
    pub gradient: G,
    pub hessian: H,
}

impl<F, G, H> SmoothFunction for FnSmooth<F, G, H>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
    H: Fn(&[f64]) -> Vec<f64>,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }
    fn hessian(&self, x: &[f64]) -> Vec<f64> {
        (self.hessian)(x)
    }
}

fn sup_abs_diff(a: &SampledPath, b: &SampledPath) -> Result<f64> {
    a.sup_distance(b)
}

fn check_levels(partitions: &[Partition], labels: &[u32]) -> Result<()> {
    if partitions.is_empty() || partitions.len() != labels.len() {
        return Err(Error::Parameter("need one label per partition level".into()));
    }
    Ok(())
}

/// `V = exp(X - [X]/2)` with its equation residual per level.
#[derive(Clone, Debug)]
pub struct RoughExponential {
    pub value: ControlledPath,
    /// `sup_t |V_t - 1 - ∫_0^t V dX|` per partition level.
    pub residuals: ConvergenceReport,
    /// Set when the input started away from zero and was shifted.
    pub shifted: bool,
}

/// The rough exponential of a one-dimensional lift.
pub fn rough_exponential(x: &RoughLift, partitions: &[Partition], labels: &[u32]) -> Result<RoughExponential> {
    check_levels(partitions, labels)?;
    if x.dim() != 1 {
        return Err(Error::Dimension("the rough exponential needs a one-dimensional path".into()));
    }
    let x0 = x.path().value(0)[0];
    let shifted = x0 != 0.0;
    let lift = Arc::new(if shifted { x.shifted(&[x0])? } else { x.clone() });
    let bracket = lift.bracket();
    let v = lift.path().map(1, |k, xv| vec![(xv[0] - 0.5 * bracket.value(k)[0]).exp()])?;
    let value = ControlledPath::new(v.clone(), v.clone(), lift.clone())?;
    let mut residuals = ConvergenceReport::default();
    for (part, &label) in partitions.iter().zip(labels) {
        let integral = compensated_integral(&value, Some(part))?;
        let resid = (0..v.len())
            .map(|k| (v.value(k)[0] - 1.0 - integral.value(k)[0]).abs())
            .fold(0.0, f64::max);
        residuals.push(label, part.mesh(lift.grid()), resid);
    }
    Ok(RoughExponential {
        value,
        residuals,
        shifted,
    })
}

/// Residual of the Itô formula for `g(F)` with `F = ∫ F' dS + Γ`, per level.
///
/// `second` holds the derivative of `F'` (shape `m x d x d`); `None` means zero.
pub fn ito_formula_residual(
    g: &dyn SmoothFunction,
    f: &ControlledPath,
    gamma: &SampledPath,
    second: Option<&SampledPath>,
    partitions: &[Partition],
    labels: &[u32],
) -> Result<ConvergenceReport> {
    check_levels(partitions, labels)?;
    let lift = f.lift().clone();
    let d = lift.dim();
    let m = f.dim();
    if gamma.dim() != m || gamma.grid() != lift.grid() {
        return Err(Error::Dimension("finite-variation part must match F".into()));
    }
    if let Some(s) = second {
        if s.dim() != m * d * d || s.grid() != lift.grid() {
            return Err(Error::Dimension("second derivative must have shape m x d x d".into()));
        }
    }
    let fv = f.value();
    let fp = f.derivative();
    let n = f.len();
    let mut k_val = Vec::with_capacity(n * d);
    let mut k_der = Vec::with_capacity(n * d * d);
    let mut dg_path = Vec::with_capacity(n * m);
    let mut hess_path = Vec::with_capacity(n * d * d);
    for k in 0..n {
        let x = fv.value(k);
        let grad = g.gradient(x);
        let hess = g.hessian(x);
        let fpk = fp.value(k);
        for j in 0..d {
            k_val.push((0..m).map(|a| grad[a] * fpk[a * d + j]).sum::<f64>());
        }
        for j in 0..d {
            for l in 0..d {
                let mut acc = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        acc += fpk[a * d + j] * hess[a * m + b] * fpk[b * d + l];
                    }
                }
                if let Some(s) = second {
                    let sk = s.value(k);
                    for a in 0..m {
                        acc += grad[a] * sk[a * d * d + j * d + l];
                    }
                }
                k_der.push(acc);
                hess_path.push(0.5 * acc_hess(&hess, fpk, m, d, j, l));
            }
        }
        dg_path.extend_from_slice(&grad);
    }
    let grid = lift.grid().clone();
    let kp = ControlledPath::new(
        SampledPath::new(grid.clone(), d, k_val)?,
        SampledPath::new(grid.clone(), d * d, k_der)?,
        lift.clone(),
    )?;
    let dg = SampledPath::new(grid.clone(), m, dg_path)?;
    let half_hess = SampledPath::new(grid, d * d, hess_path)?;
    let bracket = lift.bracket();
    let g0 = g.value(fv.value(0));
    let mut report = ConvergenceReport::default();
    for (part, &label) in partitions.iter().zip(labels) {
        let rough = compensated_integral(&kp, Some(part))?;
        let drift = left_point_sum(&dg, gamma, part)?;
        let corr = young_integral(&half_hess, bracket.path(), Some(part))?;
        let resid = (0..n)
            .map(|k| {
                (g.value(fv.value(k)) - g0 - rough.value(k)[0] - drift.value(k)[0] - corr.value(k)[0]).abs()
            })
            .fold(0.0, f64::max);
        report.push(label, part.mesh(lift.grid()), resid);
    }
    Ok(report)
}

fn acc_hess(hess: &[f64], fpk: &[f64], m: usize, d: usize, j: usize, l: usize) -> f64 {
    let mut acc = 0.0;
    for a in 0..m {
        for b in 0..m {
            acc += hess[a * m + b] * fpk[a * d + j] * fpk[b * d + l];
        }
    }
    acc
}

/// `sup_t |∫ (sum w_i K_i) dS - sum w_i ∫ K_i dS|` on the sampling grid.
pub fn mixture_integral_check(ks: &[ControlledPath], measure: &DiscreteMeasure) -> Result<f64> {
    if ks.len() != measure.len() {
        return Err(Error::Mixture("one weight per integrand required".into()));
    }
    let refs: Vec<&ControlledPath> = ks.iter().collect();
    let mixed = ControlledPath::linear_combination(&refs, measure.weights())?;
    let lhs = compensated_integral(&mixed, None)?;
    let mut rhs = vec![0.0; lhs.len()];
    for (k, w) in ks.iter().zip(measure.weights()) {
        let integral = compensated_integral(k, None)?;
        for (acc, v) in rhs.iter_mut().zip(integral.data()) {
            *acc += w * v;
        }
    }
    let rhs = SampledPath::new(lhs.grid().clone(), 1, rhs)?;
    sup_abs_diff(&lhs, &rhs)
}

/// Gap between `∫ Y dZ` and `∫ YF dG` with `Z = ∫ F dG`, per level.
///
/// `Z` is built on the sampling grid; both outer integrals run along each level.
pub fn associativity_check(
    y: &ControlledPath,
    f: &ControlledPath,
    g: &ControlledPath,
    partitions: &[Partition],
    labels: &[u32],
) -> Result<ConvergenceReport> {
    check_levels(partitions, labels)?;
    if y.dim() != 1 {
        return Err(Error::Dimension("the outer integrand must be scalar".into()));
    }
    let z = integral_as_controlled(f, g)?;
    let yf = y.product(f)?;
    let mut report = ConvergenceReport::default();
    for (part, &label) in partitions.iter().zip(labels) {
        let lhs = controlled_integral(y, &z, Some(part))?;
        let rhs = controlled_integral(&yf, g, Some(part))?;
        report.push(label, part.mesh(f.lift().grid()), sup_abs_diff(&lhs, &rhs)?);
    }
    Ok(report)
}

/// Gap between the bracket of `Z = ∫ K dS` and `∫ K ⊗ K : d[S]`, per level.
///
/// On each level `Z`, its canonical lift and the Young integral all use the
/// level's own cells.
pub fn ito_isometry_check(k: &ControlledPath, partitions: &[Partition], labels: &[u32]) -> Result<ConvergenceReport> {
    check_levels(partitions, labels)?;
    let lift = k.lift().clone();
    let d = lift.dim();
    if k.dim() != d {
        return Err(Error::Dimension("integrand must match the path dimension".into()));
    }
    let bracket = lift.bracket();
    let kk = k.value().map(d * d, |_, kv| outer(kv, kv))?;
    let mut report = ConvergenceReport::default();
    for (part, &label) in partitions.iter().zip(labels) {
        let z = compensated_integral(k, Some(part))?;
        let zc = ControlledPath::new(z, k.value().clone(), lift.clone())?;
        let zl = canonical_lift_of_controlled(&zc, Some(part))?;
        let zb = zl.bracket();
        let young = young_integral(&kk, bracket.path(), Some(part))?;
        report.push(label, part.mesh(lift.grid()), sup_abs_diff(zb.path(), &young)?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::TimeGrid;

    #[test]
    fn measure_validation() {
        assert!(DiscreteMeasure::new(vec![0.5, 0.5]).is_ok());
        assert!(DiscreteMeasure::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::new(vec![1.5, -0.5]).is_err());
        assert_eq!(DiscreteMeasure::uniform(4).unwrap().weights(), &[0.25; 4]);
    }

    #[test]
    fn exponential_of_linear_path() {
        // A straight line has bracket sum (Δt)^2 per cell, which vanishes with the mesh.
        let grid = TimeGrid::dyadic(1.0, 10).unwrap();
        let path = SampledPath::from_fn(grid.clone(), 1, |t| vec![t + 0.5]).unwrap();
        let lift = RoughLift::left_point(path, 2.5).unwrap();
        let parts = crate::path::dyadic_partitions(&grid, 4..=6).unwrap();
        let e = rough_exponential(&lift, &parts, &[4, 5, 6]).unwrap();
        assert!(e.shifted);
        assert!(e.value.value().value(0)[0] == 1.0);
        assert!(e.residuals.converged());
    }
}
