//! Internal DLA driven by infinitely many sources on the vertical axis.
//!
//! The crate grows the line-source aggregates (deterministic, Poisson in the
//! usual order, Poisson in clock order, and the classical single-source
//! cluster), extracts their directed forests, computes exact exit
//! distributions for small configurations, and runs replicate experiments.

pub mod analysis;
pub mod error;
pub mod forest;
pub mod growth;
pub mod io;
pub mod lattice;
pub mod oracle;
pub mod random;
pub mod runner;
pub mod walk;

pub use error::{Error, Result};
pub use forest::Forest;
pub use growth::{Aggregate, Emission, GrowthSpec, Variant};
pub use lattice::{Direction, Region, Site};
pub use random::RandomSource;
