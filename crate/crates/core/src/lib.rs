//! Lattice gauge theory toolkit for center symmetry and confinement.
//!
//! Monte Carlo sampling, exact enumeration on small lattices, Wilson loops
//! and chain variables, and the explicit couplings used to compare Gibbs
//! measures under different boundary conditions.

pub mod coupling;
pub mod error;
pub mod groups;
pub mod lattice;
pub mod exact;
pub mod model;
pub mod observables;
pub mod rng;
pub mod run;
pub mod stats;

pub use error::{Error, Result};
