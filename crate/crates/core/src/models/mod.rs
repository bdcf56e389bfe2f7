//! Simplex diffusions, log-optimal portfolios and Monte Carlo experiments.

mod experiments;
mod simulate;
mod spec;

pub use experiments::{
    alpha_star, alpha_star_from_integrals, ergodic_growth_rate, expected_log_optimal, figure1, log_optimal_along,
    realized_covariation_error, structure_condition_report, AlphaStar, Curve, ErgodicReport, Figure1, MCResult,
    StructureReport,
};
pub use simulate::{
    project_to_interior, psd_sqrt, simulate_market_weights, Initial, NamedInitial, SimulationConfig, Simulator, Step,
};
pub use spec::{log_optimal_portfolio, solve_lambda, DiffusionSpec, ModelKind};
