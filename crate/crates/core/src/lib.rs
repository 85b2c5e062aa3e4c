//! Weakly convex variational regularisation for finite-dimensional linear
//! inverse problems.

pub mod error;
pub mod exec;
pub mod fidelity;
pub mod fixtures;
pub mod functionals;
pub mod io;
pub mod learn;
pub mod metrics;
pub mod operators;
pub mod pdhgm;
pub mod regpath;
pub mod report;
pub mod rng;
pub mod runner;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{DenseArray, ProductPoint};
