use std::sync::Arc;

use crate::market::functions::{AffineQuadraticBasis, AffineQuadraticField};
use crate::market::{MarketPath, PortfolioPath, VectorField};
use crate::path::{Partition, SampledPath};
use crate::rough::{ConvergenceReport, ControlledPath, RoughLift};
use crate::{Error, Result};

/// Solutions larger than this are reported as unstable.
pub const EXPLOSION_BOUND: f64 = 1e6;

/// A map `y -> f(y)` into `d x d` matrices, `f^i_j`.
pub trait MatrixField: Send + Sync {
    fn dim(&self) -> usize;
    /// Row-major `f^i_j`.
    fn value(&self, y: &[f64]) -> Vec<f64>;
    /// `∂_m f^i_j` at index `(i * d + j) * d + m`.
    fn derivative(&self, y: &[f64]) -> Vec<f64>;
}

/// `f^i_j` on the affine-quadratic basis; row `i` is an [`AffineQuadraticField`].
#[derive(Clone, Debug, PartialEq)]
pub struct AffineQuadraticMatrixField {
    rows: Vec<AffineQuadraticField>,
}

impl AffineQuadraticMatrixField {
    /// Coefficients laid out by `(i, j, basis)`.
    pub fn new(dim: usize, coefficients: Vec<f64>) -> Result<Self> {
        let nb = AffineQuadraticBasis { dim }.len();
        if coefficients.len() != dim * dim * nb {
            return Err(Error::Parameter(format!(
                "matrix field in dimension {dim} needs {} coefficients, got {}",
                dim * dim * nb,
                coefficients.len()
            )));
        }
        let rows = coefficients
            .chunks(dim * nb)
            .map(|c| AffineQuadraticField::new(dim, c.to_vec()))
            .collect::<Result<_>>()?;
        Ok(AffineQuadraticMatrixField { rows })
    }

    pub fn c2_norm_at(&self, y: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.c2_norm_at(y)).fold(0.0, f64::max)
    }
}

impl MatrixField for AffineQuadraticMatrixField {
    fn dim(&self) -> usize {
        self.rows.len()
    }
    fn value(&self, y: &[f64]) -> Vec<f64> {
        self.rows.iter().flat_map(|r| r.value(y)).collect()
    }
    fn derivative(&self, y: &[f64]) -> Vec<f64> {
        self.rows.iter().flat_map(|r| r.jacobian(y)).collect()
    }
}

/// `Y` on the nodes of `partition` by the second-order step
/// `Y_b = Y_a + f(Y_a) μ_{a,b} + (Df f)(Y_a) : 𝕄_{a,b}`.
pub fn solve_controlled_equation(
    f: &dyn MatrixField,
    xi0: &[f64],
    lift: &RoughLift,
    partition: &Partition,
) -> Result<Vec<Vec<f64>>> {
    let d = lift.dim();
    if f.dim() != d || xi0.len() != d {
        return Err(Error::Dimension("field, initial value and lift must share a dimension".into()));
    }
    partition.check_fits(lift.grid())?;
    let mut y = xi0.to_vec();
    let mut out = Vec::with_capacity(partition.len());
    out.push(y.clone());
    let mut area = vec![0.0; d * d];
    for (a, b) in partition.cells() {
        let inc = lift.increment(a, b);
        lift.area_into(a, b, &mut area);
        let fv = f.value(&y);
        let df = f.derivative(&y);
        let mut next = y.clone();
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += fv[i * d + j] * inc[j];
                for l in 0..d {
                    let a_lj = area[l * d + j];
                    if a_lj == 0.0 {
                        continue;
                    }
                    let mut dff = 0.0;
                    for m in 0..d {
                        dff += df[(i * d + j) * d + m] * fv[m * d + l];
                    }
                    acc += dff * a_lj;
                }
            }
            next[i] += acc;
        }
        if next.iter().any(|v| !v.is_finite() || v.abs() > EXPLOSION_BOUND) {
            return Err(Error::Instability(format!(
                "controlled equation exceeded {EXPLOSION_BOUND} at node {b}"
            )));
        }
        y = next;
        out.push(y.clone());
    }
    Ok(out)
}

/// `π^f = μ (Y + (1 - μ·Y) 1)` with `Y` solved on the full sampling grid.
pub fn controlled_equation_portfolio(
    f: Arc<dyn MatrixField>,
    xi0: &[f64],
    market: &MarketPath,
) -> Result<PortfolioPath> {
    let d = market.dim();
    let lift = market.weight_lift();
    let ys = solve_controlled_equation(f.as_ref(), xi0, lift, &market.full_partition())?;
    let weights = market.weights();
    let mut ratio = Vec::with_capacity(ys.len() * d);
    let mut ratio_derivative = Vec::with_capacity(ys.len() * d * d);
    for (k, y) in ys.iter().enumerate() {
        let mu = weights.value(k);
        let c = 1.0 - crate::linalg::dot(mu, y);
        ratio.extend(y.iter().map(|v| v + c));
        let yp = f.value(y);
        // (μ·Y)' = Y^j + sum_k μ^k Y'^k_j
        let shift: Vec<f64> = (0..d)
            .map(|j| y[j] + (0..d).map(|m| mu[m] * yp[m * d + j]).sum::<f64>())
            .collect();
        for i in 0..d {
            for j in 0..d {
                ratio_derivative.push(yp[i * d + j] - shift[j]);
            }
        }
    }
    let grid = market.grid().clone();
    let ratio = ControlledPath::new(
        SampledPath::new(grid.clone(), d, ratio)?,
        SampledPath::new(grid, d * d, ratio_derivative)?,
        lift.clone(),
    )?;
    PortfolioPath::from_ratio_path(&ratio, market)
}

/// Sup-gap at the coarsest nodes between each level's solution and the full-grid one.
pub fn controlled_equation_convergence(
    f: &dyn MatrixField,
    xi0: &[f64],
    lift: &RoughLift,
    partitions: &[Partition],
    labels: &[u32],
) -> Result<ConvergenceReport> {
    if partitions.is_empty() || partitions.len() != labels.len() {
        return Err(Error::Parameter("need one label per partition level".into()));
    }
    let reference = solve_controlled_equation(f, xi0, lift, &Partition::full(lift.len()))?;
    let coarse = &partitions[0];
    let mut report = ConvergenceReport::default();
    for (part, &label) in partitions.iter().zip(labels) {
        if !coarse.is_refined_by(part) {
            return Err(Error::NotNested(format!("level {label} does not refine the first level")));
        }
        let ys = solve_controlled_equation(f, xi0, lift, part)?;
        let mut gap = 0.0_f64;
        for (pos, &node) in part.nodes().iter().enumerate() {
            if coarse.nodes().binary_search(&node).is_ok() {
                gap = gap.max(crate::linalg::dist(&ys[pos], &reference[node]));
            }
        }
        report.push(label, part.mesh(lift.grid()), gap);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::TimeGrid;
    use crate::rough::LiftKind;

    fn market() -> MarketPath {
        let grid = TimeGrid::dyadic(1.0, 8).unwrap();
        let prices = SampledPath::from_fn(grid, 3, |t| {
            vec![1.0 + 0.3 * (13.0 * t).sin(), 1.1 + 0.2 * (7.0 * t).cos(), 0.9 + 0.1 * t]
        })
        .unwrap();
        MarketPath::from_prices(prices, LiftKind::LeftPoint).unwrap()
    }

    #[test]
    fn zero_field_matches_constant_functional_portfolio() {
        let m = market();
        let nb = AffineQuadraticBasis { dim: 3 }.len();
        let f: Arc<dyn MatrixField> = Arc::new(AffineQuadraticMatrixField::new(3, vec![0.0; 9 * nb]).unwrap());
        let xi0 = [0.2, -0.1, 0.4];
        let pi = controlled_equation_portfolio(f, &xi0, &m).unwrap();
        let field = AffineQuadraticField::affine(&[0.0; 9], &xi0).unwrap();
        let reference = PortfolioPath::functionally_controlled(Arc::new(field), &m).unwrap();
        assert!(pi.value().sup_distance(reference.value()).unwrap() < 1e-14);
        assert!(pi.derivative().sup_distance(reference.derivative()).unwrap() < 1e-14);
    }

    #[test]
    fn explosion_is_reported() {
        let m = market();
        let nb = AffineQuadraticBasis { dim: 3 }.len();
        // f^i_1(y) = 1e9 y_i multiplies Y by roughly 1 + 1e9 Δμ^1 per step.
        let mut c = vec![0.0; 9 * nb];
        for i in 0..3 {
            c[(i * 3) * nb + 1 + i] = 1e9;
        }
        let f: Arc<dyn MatrixField> = Arc::new(AffineQuadraticMatrixField::new(3, c).unwrap());
        let r = controlled_equation_portfolio(f, &[1.0, 1.0, 1.0], &m);
        assert!(matches!(r, Err(Error::Instability(_))));
    }
}
