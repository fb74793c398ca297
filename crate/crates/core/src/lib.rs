//! Optimal DKS proximity-graph weights for points on a line.

pub mod chain;
pub mod cli;
pub mod error;
pub mod explicit_chain;
pub mod implicit_chain;
pub mod instance;
mod linalg;
pub mod oracle;
pub mod parallel;
pub mod numerics;
pub mod plf;
pub mod solver;

pub use error::{Error, Result};
pub use numerics::{Exact, Scalar, ToleranceConfig};
