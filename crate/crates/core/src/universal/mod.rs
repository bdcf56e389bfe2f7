//! Universal portfolios over finite function families and their diagnostics.

mod clock;
mod equation;
mod examples;
mod family;
mod mixture;

pub use clock::{
    admissibility_check, default_exponents, growth_clock, growth_clock_trajectory, metric_d_beta,
    ratio_seminorm_prefixes, seminorm, AdmissibilityReport, ClockValues, MetricSpec, ADMISSIBILITY_NODE_LIMIT,
    CLOCK_NODE_LIMIT,
};
pub use equation::{
    controlled_equation_convergence, controlled_equation_portfolio, solve_controlled_equation,
    AffineQuadraticMatrixField, MatrixField, EXPLOSION_BOUND,
};
pub use examples::{
    gradient_bound_check, gradient_sup, left_point_cross_integral, non_gradient_witness_field,
    non_gradient_witness_wealth, nontriviality_market, nontriviality_path, nontriviality_value, GradientBoundReport,
    GradientField,
};
pub use family::{simplex_mesh, Basis, FamilyKind, FunctionFamily, MESH_PER_AXIS};
pub use mixture::{
    best_retrospective, cover_gap_from_wealth, cover_gap_trajectory, member_wealths, mixture_wealth_identity,
    universal_portfolio, BestMember, CoverGapReport, CoverRow, RefinedMember, UniversalPortfolio,
};
