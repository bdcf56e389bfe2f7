use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::functions::{AffineQuadraticField, GeneratingFunction, GeneratorSpec, LogGradient, VectorField};
use super::MarketPath;
use crate::path::SampledPath;
use crate::rough::ControlledPath;
use crate::{Error, Result};

/// `π / μ` for the functionally controlled portfolio of `F`:
/// `r(x) = F(x) + (1 - x·F(x)) 1`.
pub struct FieldRatio(pub Arc<dyn VectorField>);

impl VectorField for FieldRatio {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        let f = self.0.value(x);
        let c = 1.0 - crate::linalg::dot(x, &f);
        f.iter().map(|v| v + c).collect()
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let f = self.0.value(x);
        let mut jac = self.0.jacobian(x);
        let shift: Vec<f64> = (0..d)
            .map(|j| f[j] + (0..d).map(|k| x[k] * jac[k * d + j]).sum::<f64>())
            .collect();
        for i in 0..d {
            for j in 0..d {
                jac[i * d + j] -= shift[j];
            }
        }
        jac
    }
}

/// `π / μ = w / x` for a constant-weight portfolio.
struct ConstantRatio(Vec<f64>);

impl VectorField for ConstantRatio {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.0.iter().zip(x).map(|(w, v)| w / v).collect()
    }
    fn jacobian(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let mut j = vec![0.0; d * d];
        for i in 0..d {
            j[i * d + i] = -self.0[i] / (x[i] * x[i]);
        }
        j
    }
}

/// A portfolio controlled by the market-weights lift.
#[derive(Clone)]
pub struct PortfolioPath {
    controlled: ControlledPath,
    ratio_field: Option<Arc<dyn VectorField>>,
}

impl std::fmt::Debug for PortfolioPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PortfolioPath")
            .field("controlled", &self.controlled)
            .field("functional", &self.ratio_field.is_some())
            .finish()
    }
}

fn check_budget(value: &SampledPath) -> Result<()> {
    for k in 0..value.len() {
        let total: f64 = value.value(k).iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("portfolio weights at node {k} sum to {total}")));
        }
    }
    Ok(())
}

impl PortfolioPath {
    /// Wraps an explicit `(π, π')`; weights must sum to one at every node.
    pub fn new(controlled: ControlledPath) -> Result<Self> {
        check_budget(controlled.value())?;
        Ok(PortfolioPath {
            controlled,
            ratio_field: None,
        })
    }

    /// Builds `π = μ r(μ)` from a ratio field evaluated along the weights.
    pub fn from_ratio_field(field: Arc<dyn VectorField>, market: &MarketPath) -> Result<Self> {
        let d = market.dim();
        if field.dim() != d {
            return Err(Error::Dimension(format!(
                "field of dimension {} on a {d}-asset market",
                field.dim()
            )));
        }
        let lift = market.weight_lift().clone();
        let weights = market.weights();
        let value = weights.map(d, |_, x| {
            let r = field.value(x);
            x.iter().zip(&r).map(|(a, b)| a * b).collect()
        })?;
        let derivative = weights.map(d * d, |_, x| {
            let r = field.value(x);
            let jr = field.jacobian(x);
            let mut out = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] = x[i] * jr[i * d + j];
                }
                out[i * d + i] += r[i];
            }
            out
        })?;
        let controlled = ControlledPath::new(value, derivative, lift)?;
        check_budget(controlled.value())?;
        Ok(PortfolioPath {
            controlled,
            ratio_field: Some(field),
        })
    }

    /// `π = μ r` from a ratio path `(r, r')` controlled by the weights lift.
    pub fn from_ratio_path(ratio: &ControlledPath, market: &MarketPath) -> Result<Self> {
        let d = market.dim();
        if ratio.dim() != d || !Arc::ptr_eq(ratio.lift(), market.weight_lift()) {
            return Err(Error::ReferenceMismatch);
        }
        let weights = market.weights();
        let value = weights.map(d, |k, x| {
            x.iter().zip(ratio.value().value(k)).map(|(a, b)| a * b).collect()
        })?;
        let derivative = weights.map(d * d, |k, x| {
            let r = ratio.value().value(k);
            let jr = ratio.derivative().value(k);
            let mut out = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    out[i * d + j] = x[i] * jr[i * d + j];
                }
                out[i * d + i] += r[i];
            }
            out
        })?;
        PortfolioPath::new(ControlledPath::new(value, derivative, market.weight_lift().clone())?)
    }

    /// `π^F = μ (F(μ) + 1 - μ·F(μ))`.
    pub fn functionally_controlled(field: Arc<dyn VectorField>, market: &MarketPath) -> Result<Self> {
        PortfolioPath::from_ratio_field(Arc::new(FieldRatio(field)), market)
    }

    /// `π^i = μ^i (∂_i log G + 1 - sum μ^k ∂_k log G)`.
    pub fn functionally_generated(g: Arc<dyn GeneratingFunction>, market: &MarketPath) -> Result<Self> {
        PortfolioPath::functionally_controlled(Arc::new(LogGradient(g)), market)
    }

    /// `π = μ`.
    pub fn market(market: &MarketPath) -> Result<Self> {
        let zero = AffineQuadraticField::new(market.dim(), vec![0.0; market.dim() * (1 + market.dim() + market.dim() * (market.dim() + 1) / 2)])?;
        PortfolioPath::functionally_controlled(Arc::new(zero), market)
    }

    /// Constant weights `w`, with zero derivative.
    pub fn constant(weights: &[f64], market: &MarketPath) -> Result<Self> {
        if weights.len() != market.dim() {
            return Err(Error::Dimension("one weight per asset required".into()));
        }
        PortfolioPath::from_ratio_field(Arc::new(ConstantRatio(weights.to_vec())), market)
    }

    pub fn controlled(&self) -> &ControlledPath {
        &self.controlled
    }

    pub fn value(&self) -> &SampledPath {
        self.controlled.value()
    }

    pub fn derivative(&self) -> &SampledPath {
        self.controlled.derivative()
    }

    pub fn dim(&self) -> usize {
        self.controlled.dim()
    }

    /// `π / μ` as a function of the weights, when the portfolio has one.
    pub fn ratio_field(&self) -> Option<&Arc<dyn VectorField>> {
        self.ratio_field.as_ref()
    }

    /// `π / μ` controlled by the weights lift, via the reciprocal of `μ`.
    pub fn ratio(&self, market: &MarketPath) -> Result<ControlledPath> {
        let inv = market.weights_controlled().reciprocal()?;
        self.controlled.product(&inv)
    }

    /// `π` re-expressed against the price lift, using `∂μ^k/∂S^j = (δ_kj - μ^k) / sum S`.
    pub fn against_prices(&self, market: &MarketPath) -> Result<ControlledPath> {
        let d = market.dim();
        let prices = market.prices();
        let weights = market.weights();
        let derivative = self.controlled.derivative().map(d * d, |k, dp| {
            let total: f64 = prices.value(k).iter().sum();
            let mu = weights.value(k);
            let mut out = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    let mut acc = 0.0;
                    for m in 0..d {
                        let jac = (if m == j { 1.0 } else { 0.0 } - mu[m]) / total;
                        acc += dp[i * d + m] * jac;
                    }
                    out[i * d + j] = acc;
                }
            }
            out
        })?;
        ControlledPath::new(self.value().clone(), derivative, market.price_lift().clone())
    }

    /// The portfolio on a truncated market.
    pub fn restricted_to(&self, market: &MarketPath) -> Result<PortfolioPath> {
        if let Some(f) = &self.ratio_field {
            return PortfolioPath::from_ratio_field(f.clone(), market);
        }
        let controlled = self.controlled.truncate_with(market.weight_lift().clone())?;
        PortfolioPath::new(controlled)
    }
}

/// JSON description of a portfolio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PortfolioSpec {
    Market,
    Constant { weights: Vec<f64> },
    Generated { generator: GeneratorSpec },
    Controlled { coefficients: Vec<f64> },
}

impl PortfolioSpec {
    pub fn build(&self, market: &MarketPath) -> Result<PortfolioPath> {
        let d = market.dim();
        match self {
            PortfolioSpec::Market => PortfolioPath::market(market),
            PortfolioSpec::Constant { weights } => PortfolioPath::constant(weights, market),
            PortfolioSpec::Generated { generator } => {
                PortfolioPath::functionally_generated(generator.build(d)?, market)
            }
            PortfolioSpec::Controlled { coefficients } => PortfolioPath::functionally_controlled(
                Arc::new(AffineQuadraticField::new(d, coefficients.clone())?),
                market,
            ),
        }
    }

    pub fn generator(&self, dim: usize) -> Result<Option<Arc<dyn GeneratingFunction>>> {
        match self {
            PortfolioSpec::Generated { generator } => Ok(Some(generator.build(dim)?)),
            PortfolioSpec::Market => Ok(Some(GeneratorSpec::Constant.build(dim)?)),
            _ => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::functions::GeometricMean;
    use crate::path::TimeGrid;
    use crate::rough::LiftKind;

    fn market() -> MarketPath {
        let grid = TimeGrid::uniform(1.0, 32).unwrap();
        let prices = SampledPath::from_fn(grid, 3, |t| {
            vec![1.0 + 0.3 * (4.0 * t).sin(), 1.2 + 0.2 * t, 0.8 + 0.1 * (9.0 * t).cos()]
        })
        .unwrap();
        MarketPath::from_prices(prices, LiftKind::LeftPoint).unwrap()
    }

    #[test]
    fn geometric_generator_gives_its_weights() {
        let m = market();
        let w = vec![0.2, 0.5, 0.3];
        let pi = PortfolioPath::functionally_generated(Arc::new(GeometricMean { weights: w.clone() }), &m).unwrap();
        for k in 0..m.len() {
            for i in 0..3 {
                assert!((pi.value().value(k)[i] - w[i]).abs() < 1e-14);
            }
            assert!(crate::linalg::max_abs(pi.derivative().value(k)) < 1e-13);
        }
    }

    #[test]
    fn market_portfolio_is_weights() {
        let m = market();
        let pi = PortfolioPath::market(&m).unwrap();
        assert!(pi.value().sup_distance(m.weights()).unwrap() < 1e-15);
        let id = crate::linalg::identity(3);
        assert!(crate::linalg::dist(pi.derivative().value(5), &id) < 1e-15);
    }

    #[test]
    fn ratio_of_field_matches_product_rule() {
        let m = market();
        let field = AffineQuadraticField::affine(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        let pi = PortfolioPath::functionally_controlled(Arc::new(field), &m).unwrap();
        let r = pi.ratio(&m).unwrap();
        let rf = pi.ratio_field().unwrap();
        for k in [0, 7, 32] {
            let x = m.weights().value(k);
            assert!(crate::linalg::dist(&rf.value(x), r.value().value(k)) < 1e-14);
            assert!(crate::linalg::dist(&rf.jacobian(x), r.derivative().value(k)) < 1e-13);
        }
    }

    #[test]
    fn spec_parses() {
        let s: PortfolioSpec =
            serde_json::from_str(r#"{"kind":"generated","generator":{"kind":"diversity","p":0.5}}"#).unwrap();
        assert!(s.build(&market()).is_ok());
    }
}
