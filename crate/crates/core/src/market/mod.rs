//! Market weights, covariation, portfolios and relative wealth.

pub mod functions;
#[allow(clippy::module_inception)]
mod market;
mod portfolio;
mod wealth;

pub use functions::{GeneratingFunction, GeneratorSpec, VectorField};
pub use market::{market_weights, MarketPath, WEIGHT_FLOOR};
pub use portfolio::{FieldRatio, PortfolioPath, PortfolioSpec};
pub use wealth::{
    discrete_wealth, excess_growth, excess_growth_via_tau, line_integral, log_relative_wealth,
    master_formula_check, master_formula_rhs, relative_covariance, wealth, LogRelativeWealth,
    MasterFormulaReport, WealthRecord,
};
