pub mod cli;
pub mod dd;
pub mod ensemble;
pub mod equilibrium;
pub mod error;
pub mod linalg;
pub mod mop;
pub mod poly;
pub mod quad;
pub mod weights;

pub use dd::{DoubleDouble, Real};
pub use error::{Error, Result};
