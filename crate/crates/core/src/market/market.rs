use std::sync::Arc;

use crate::path::{Partition, SampledPath};
use crate::rough::{Bracket, ControlledPath, LiftKind, RoughLift, DEFAULT_P};
use crate::{Error, Result};

/// Weights below this are treated as having hit the simplex boundary.
pub const WEIGHT_FLOOR: f64 = 1e-10;

/// Market weights `μ^i = S^i / sum S` and `W^μ_t = sum S_t / sum S_0`.
pub fn market_weights(prices: &SampledPath) -> Result<(SampledPath, Vec<f64>)> {
    if let Some(k) = prices.data().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!(
            "price {} at node {} is not positive",
            prices.data()[k],
            k / prices.dim()
        )));
    }
    let total0: f64 = prices.value(0).iter().sum();
    let mut wealth = Vec::with_capacity(prices.len());
    let weights = prices.map(prices.dim(), |_, s| {
        let total: f64 = s.iter().sum();
        wealth.push(total / total0);
        s.iter().map(|v| v / total).collect()
    })?;
    if let Some(k) = weights.data().iter().position(|&w| w < WEIGHT_FLOOR) {
        return Err(Error::Boundary(format!(
            "weight {} of asset {} at node {} is below {WEIGHT_FLOOR}",
            weights.data()[k],
            k % prices.dim(),
            k / prices.dim()
        )));
    }
    Ok((weights, wealth))
}

/// A price path with its lifts, weights and bracket.
#[derive(Clone, Debug)]
pub struct MarketPath {
    price_lift: Arc<RoughLift>,
    weight_lift: Arc<RoughLift>,
    price_bracket: Bracket,
    weight_bracket: Bracket,
    market_wealth: Vec<f64>,
}

impl MarketPath {
    /// `kind` is [`LiftKind::LeftPoint`] for diffusion-like data and
    /// [`LiftKind::Geometric`] for finite-variation (zero-bracket) markets.
    pub fn from_prices(prices: SampledPath, kind: LiftKind) -> Result<Self> {
        Self::from_prices_with_p(prices, kind, DEFAULT_P)
    }

    pub fn from_prices_with_p(prices: SampledPath, kind: LiftKind, p: f64) -> Result<Self> {
        if prices.dim() < 2 {
            return Err(Error::Dimension("a market needs at least two assets".into()));
        }
        let (weights, market_wealth) = market_weights(&prices)?;
        let lift = |path: SampledPath| match kind {
            LiftKind::Geometric => RoughLift::geometric(path, p),
            _ => RoughLift::left_point(path, p),
        };
        let price_lift = Arc::new(lift(prices)?);
        let weight_lift = Arc::new(lift(weights)?);
        let price_bracket = price_lift.bracket();
        let weight_bracket = weight_lift.bracket();
        Ok(MarketPath {
            price_lift,
            weight_lift,
            price_bracket,
            weight_bracket,
            market_wealth,
        })
    }

    /// A market whose prices equal its weights (unit total capitalisation).
    pub fn from_weights(weights: SampledPath, kind: LiftKind) -> Result<Self> {
        for k in 0..weights.len() {
            let total: f64 = weights.value(k).iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("weights at node {k} sum to {total}")));
            }
        }
        MarketPath::from_prices(weights, kind)
    }

    pub fn dim(&self) -> usize {
        self.price_lift.dim()
    }

    pub fn len(&self) -> usize {
        self.price_lift.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grid(&self) -> &crate::path::TimeGrid {
        self.price_lift.grid()
    }

    pub fn prices(&self) -> &SampledPath {
        self.price_lift.path()
    }

    pub fn weights(&self) -> &SampledPath {
        self.weight_lift.path()
    }

    pub fn price_lift(&self) -> &Arc<RoughLift> {
        &self.price_lift
    }

    pub fn weight_lift(&self) -> &Arc<RoughLift> {
        &self.weight_lift
    }

    pub fn price_bracket(&self) -> &Bracket {
        &self.price_bracket
    }

    pub fn weight_bracket(&self) -> &Bracket {
        &self.weight_bracket
    }

    /// `W^μ_t` at every node.
    pub fn market_wealth(&self) -> &[f64] {
        &self.market_wealth
    }

    pub fn has_zero_bracket(&self) -> bool {
        self.price_lift.has_zero_bracket()
    }

    /// `μ` as a path controlled by its own lift.
    pub fn weights_controlled(&self) -> ControlledPath {
        ControlledPath::identity(self.weight_lift.clone())
    }

    /// Rebuilds the market on `[0, t_last]` where `t_last` is the last node not after `horizon`.
    pub fn up_to(&self, horizon: f64) -> Result<MarketPath> {
        let prices = self.prices().up_to(horizon)?;
        if prices.len() == self.len() {
            return Ok(self.clone());
        }
        MarketPath::from_prices_with_p(prices, self.price_lift.kind(), self.price_lift.p())
    }

    /// Covariance increment `a^{ij} = [S]^{ij}_{s,t} / (S^i_s S^j_s)`.
    pub fn covariance_increment(&self, s: usize, t: usize, out: &mut [f64]) {
        let d = self.dim();
        let sv = self.prices().value(s);
        let (b0, b1) = (self.price_bracket.value(s), self.price_bracket.value(t));
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = (b1[i * d + j] - b0[i * d + j]) / (sv[i] * sv[j]);
            }
        }
    }

    pub fn full_partition(&self) -> Partition {
        Partition::full(self.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::TimeGrid;

    #[test]
    fn weights_and_market_wealth() {
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        let prices = SampledPath::new(grid, 2, vec![1.0, 3.0, 2.0, 2.0, 5.0, 3.0]).unwrap();
        let (w, total) = market_weights(&prices).unwrap();
        assert_eq!(w.value(0), &[0.25, 0.75]);
        assert_eq!(total, vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_nonpositive_prices() {
        let grid = TimeGrid::uniform(1.0, 1).unwrap();
        let prices = SampledPath::new(grid, 2, vec![1.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(matches!(market_weights(&prices), Err(Error::Domain(_))));
    }

    #[test]
    fn boundary_weights_rejected() {
        let grid = TimeGrid::uniform(1.0, 1).unwrap();
        let prices = SampledPath::new(grid, 2, vec![1.0, 1e-12, 1.0, 1.0]).unwrap();
        assert!(matches!(market_weights(&prices), Err(Error::Boundary(_))));
    }
}
