//! Rough-path lifts, controlled paths and rough integration.

mod controlled;
pub mod convergence;
mod diagnostic;
mod identities;
mod integrate;
mod lift;

pub use controlled::{product_remainder_residual, ControlledPath};
pub use convergence::{ConvergenceReport, LevelGap, SHRINK_THRESHOLD};
pub use diagnostic::{lift_via_left_point, rie_diagnostic, RieReport, KAPPA_MAX_NODES};
pub use identities::{
    associativity_check, ito_formula_residual, ito_isometry_check, mixture_integral_check,
    rough_exponential, DiscreteMeasure, FnSmooth, RoughExponential, SmoothFunction,
};
pub use integrate::{
    canonical_lift_of_controlled, compensated_integral, controlled_integral, integral_as_controlled,
    left_point_integral, left_point_sum, young_integral,
};
pub use lift::{
    bracket_identity_residual, bracket_partition_sum, Bracket, LiftKind, RoughLift, DEFAULT_P,
};
