//! Seeded sample paths for tests, demos and convergence studies.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::market::MarketPath;
use crate::models::{DiffusionSpec, SimulationConfig, Simulator};
use crate::path::{SampledPath, TimeGrid};
use crate::rough::LiftKind;
use crate::Result;

/// Brownian motion started at zero on the dyadic grid of `[0, horizon]` with `2^level` cells.
pub fn brownian(seed: u64, dim: usize, horizon: f64, level: u32) -> Result<SampledPath> {
    let grid = TimeGrid::dyadic(horizon, level)?;
    let n = grid.len();
    let sd = (horizon / (n - 1) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0; n * dim];
    for k in 1..n {
        for i in 0..dim {
            let z: f64 = StandardNormal.sample(&mut rng);
            data[k * dim + i] = data[(k - 1) * dim + i] + sd * z;
        }
    }
    SampledPath::new(grid, dim, data)
}

/// Geometric Brownian prices `exp(vol W_t)` started at one.
pub fn geometric_prices(seed: u64, dim: usize, horizon: f64, level: u32, vol: f64) -> Result<SampledPath> {
    let w = brownian(seed, dim, horizon, level)?;
    w.map(dim, |_, x| x.iter().map(|v| (vol * v).exp()).collect())
}

/// Market weights of a volatility-stabilised diffusion on the dyadic grid, as a left-point market.
///
/// `α = 1`, `γ = 0.5`, started at the centre of the simplex.
pub fn diffusion_market(seed: u64, dim: usize, horizon: f64, level: u32) -> Result<MarketPath> {
    let spec = DiffusionSpec::vol_stabilized(1.0, 0.5, 0.0, dim)?;
    let step = horizon / (1u64 << level) as f64;
    let config = SimulationConfig::new(step, horizon, 1, seed);
    let path = Simulator::new(&spec, &config)?.path(0)?;
    // Re-sample on the exact dyadic grid so partitions line up with other fixtures.
    let grid = TimeGrid::dyadic(horizon, level)?;
    let weights = SampledPath::new(grid, dim, path.data().to_vec())?;
    MarketPath::from_weights(weights, LiftKind::LeftPoint)
}
