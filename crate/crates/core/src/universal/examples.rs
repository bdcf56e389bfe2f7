use std::f64::consts::PI;
use std::sync::Arc;

use super::family::{simplex_mesh, MESH_PER_AXIS};
use crate::market::functions::AffineQuadraticField;
use crate::market::{log_relative_wealth, MarketPath, PortfolioPath, VectorField};
use crate::path::{SampledPath, TimeGrid};
use crate::rough::{LiftKind, SmoothFunction, DEFAULT_P};
use crate::{Error, Result};

/// Three-asset weights that circle `(1/3, 1/3, 1/3)` once per period `2π`, with
/// radius `k^{-λ}/9` in period `k`.
pub fn nontriviality_path(lambda: f64, periods: usize, nodes_per_period: usize) -> Result<SampledPath> {
    if !(lambda > 1.0 / DEFAULT_P && lambda < 0.5) {
        return Err(Error::Parameter(format!(
            "λ = {lambda} must lie in ({}, 1/2)",
            1.0 / DEFAULT_P
        )));
    }
    if periods == 0 || nodes_per_period < 4 {
        return Err(Error::Parameter("need at least one period and four nodes per period".into()));
    }
    let n = periods * nodes_per_period;
    let grid = TimeGrid::uniform(2.0 * PI * periods as f64, n)?;
    let mut data = Vec::with_capacity(3 * (n + 1));
    for idx in 0..=n {
        let k = idx / nodes_per_period + 1;
        let phase = 2.0 * PI * (idx % nodes_per_period) as f64 / nodes_per_period as f64;
        let a = (k as f64).powf(-lambda) / 3.0;
        let (s, c) = phase.sin_cos();
        data.push((1.0 + a * (1.0 - c)) / 3.0);
        data.push((1.0 + a * s) / 3.0);
        data.push((1.0 + a * (c - 1.0 - s)) / 3.0);
    }
    SampledPath::new(grid, 3, data)
}

/// `(π/81) sum_{k<=n} k^{-2λ}`.
pub fn nontriviality_value(lambda: f64, periods: usize) -> f64 {
    PI / 81.0 * (1..=periods).map(|k| (k as f64).powf(-2.0 * lambda)).sum::<f64>()
}

/// The zero-bracket market whose weights are [`nontriviality_path`].
pub fn nontriviality_market(lambda: f64, periods: usize, nodes_per_period: usize) -> Result<MarketPath> {
    MarketPath::from_weights(nontriviality_path(lambda, periods, nodes_per_period)?, LiftKind::Geometric)
}

/// Left-point sum of `∫ μ^2 dμ^1` over the whole grid.
pub fn left_point_cross_integral(path: &SampledPath) -> f64 {
    (0..path.len() - 1)
        .map(|k| path.value(k)[1] * (path.value(k + 1)[0] - path.value(k)[0]))
        .sum()
}

/// `F(x) = (x_2, 0, 0)`, which is not a gradient.
pub fn non_gradient_witness_field() -> AffineQuadraticField {
    let mut m = [0.0; 9];
    m[1] = 1.0;
    AffineQuadraticField::affine(&m, &[0.0; 3]).expect("3x3")
}

/// `∇f` of a potential as a vector field.
pub struct GradientField<S> {
    pub potential: S,
    pub dim: usize,
}

impl<S: SmoothFunction + Send + Sync> VectorField for GradientField<S> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.potential.gradient(x)
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        self.potential.hessian(x)
    }
}

/// Gradient-type wealth against the `2K` bound.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientBoundReport {
    pub sup_log_wealth: f64,
    pub terminal_log_wealth: f64,
    /// `|log V_T - (f(μ_T) - f(μ_0))|`
    pub endpoint_gap: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Largest `|∇f|` over the closed-simplex sample mesh.
pub fn gradient_sup<S: SmoothFunction>(f: &S, dim: usize) -> f64 {
    simplex_mesh(dim, MESH_PER_AXIS)
        .iter()
        .map(|x| crate::linalg::norm(&f.gradient(x)))
        .fold(0.0, f64::max)
}

/// `sup_T log V^{π^{∇f}}_T <= 2K` on a zero-bracket market with `|∇f| <= K`.
pub fn gradient_bound_check<S>(f: S, k_cap: f64, market: &MarketPath, tol: f64) -> Result<GradientBoundReport>
where
    S: SmoothFunction + Send + Sync + 'static,
{
    let d = market.dim();
    if !market.has_zero_bracket() && crate::linalg::max_abs(market.weight_bracket().path().data()) > 1e-12 {
        return Err(Error::Precondition("the weights have a non-negligible bracket".into()));
    }
    let sup = gradient_sup(&f, d);
    if sup > k_cap * (1.0 + 1e-12) {
        return Err(Error::Family(format!("|∇f| reaches {sup}, above K = {k_cap}")));
    }
    let mu = market.weights();
    let rise = f.value(mu.last()) - f.value(mu.value(0));
    let field: Arc<dyn VectorField> = Arc::new(GradientField { potential: f, dim: d });
    let pi = PortfolioPath::functionally_controlled(field, market)?;
    let log_v = log_relative_wealth(&pi, market, None)?.log_relative;
    let sup_log_wealth = log_v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let terminal = *log_v.last().unwrap();
    Ok(GradientBoundReport {
        sup_log_wealth,
        terminal_log_wealth: terminal,
        endpoint_gap: (terminal - rise).abs(),
        bound: 2.0 * k_cap,
        within_bound: sup_log_wealth <= 2.0 * k_cap + tol,
    })
}

/// `log V_T` of the non-gradient witness on the circling market.
pub fn non_gradient_witness_wealth(lambda: f64, periods: usize, nodes_per_period: usize) -> Result<f64> {
    let market = nontriviality_market(lambda, periods, nodes_per_period)?;
    let pi = PortfolioPath::functionally_controlled(Arc::new(non_gradient_witness_field()), &market)?;
    Ok(*log_relative_wealth(&pi, &market, None)?.log_relative.last().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough::FnSmooth;

    #[test]
    fn path_stays_on_simplex_and_returns_to_centre() {
        let p = nontriviality_path(0.45, 3, 64).unwrap();
        for k in 0..p.len() {
            let x = p.value(k);
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(x.iter().all(|v| *v > 0.0));
        }
        for k in [0, 64, 128, 192] {
            assert!(p.value(k).iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn lambda_range_checked() {
        assert!(nontriviality_path(0.3, 2, 64).is_err());
        assert!(nontriviality_path(0.5, 2, 64).is_err());
    }

    #[test]
    fn linear_potential_wealth_is_its_rise() {
        let market = nontriviality_market(0.45, 2, 128).unwrap();
        let v = [0.3, -0.2, 0.1];
        let f = FnSmooth {
            value: move |x: &[f64]| crate::linalg::dot(&v, x),
            gradient: move |_: &[f64]| v.to_vec(),
            hessian: |_: &[f64]| vec![0.0; 9],
        };
        let k = crate::linalg::norm(&v);
        let rep = gradient_bound_check(f, k, &market, 1e-6).unwrap();
        assert!(rep.endpoint_gap < 1e-14);
        assert!(rep.within_bound);
    }

    #[test]
    fn bracketed_market_is_refused() {
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        let prices = SampledPath::from_fn(grid, 2, |t| vec![1.0 + 0.2 * (40.0 * t).sin(), 1.0]).unwrap();
        let market = MarketPath::from_prices(prices, LiftKind::LeftPoint).unwrap();
        let f = FnSmooth {
            value: |_: &[f64]| 0.0,
            gradient: |_: &[f64]| vec![0.0; 2],
            hessian: |_: &[f64]| vec![0.0; 4],
        };
        assert!(matches!(gradient_bound_check(f, 1.0, &market, 1e-6), Err(Error::Precondition(_))));
    }
}
