//! Exact max-flow / min-cut laboratory for first-passage percolation on
//! cylinder lattices.

pub mod capacity;
pub mod estimators;
pub mod error;
pub mod flow;
pub mod lattice;
pub mod lipschitz;
pub mod network;
pub mod oracle;
pub mod penalized;
pub mod rng;
pub mod surface;

pub use error::{Error, Result};
