//! Time grids, sampled paths, partitions and p-variation.

mod control;
mod grid;
mod partition;
pub mod pvar;
mod sampled;

pub use control::ControlFunction;
pub use grid::TimeGrid;
pub use partition::{dyadic_partitions, Partition, PartitionSequence};
pub use pvar::{p_variation, p_variation_norm, two_param_p_variation, PVariation};
pub use sampled::{piecewise_constant_approx, SampledPath, StepPath};
