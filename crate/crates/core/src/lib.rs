pub mod algebra;
pub mod error;
pub mod evolution;
pub mod kernels;
pub mod numerics;
pub mod oracles;
pub mod paths;

pub use error::{Error, Result};
