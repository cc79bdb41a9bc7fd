pub mod acquisition;
pub mod algorithms;
pub mod domain;
pub mod error;
pub mod gp;
pub mod harness;
pub mod metrics;
pub mod paths;
pub mod problems;
pub mod surrogate;

pub use error::{BaxError, Result};
