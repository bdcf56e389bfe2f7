//! Pathwise stochastic portfolio theory driven by rough paths.
//!
//! The crate is layered bottom-up:
//!
//! * [`path`] holds time grids, sampled paths, partitions and p-variation.
//! * [`rough`] builds rough-path lifts, controlled paths and rough integrals.
//! * [`market`] turns price paths into weights, covariations and wealth.
//! * [`universal`] covers admissible families and Cover's universal portfolio.
//! * [`models`] simulates diffusion markets and the log-optimal experiments.
//! * [`io`] reads and writes the CSV and JSON interchange formats.
//! * [`fixtures`] generates the seeded sample paths used in tests and demos.

pub mod error;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod market;
pub mod models;
pub mod path;
pub mod rough;
pub mod universal;

pub use error::{Error, Result};
