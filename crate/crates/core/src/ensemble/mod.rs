//! MOP ensembles: densities, sign checks, correlation kernels, MCMC sampling
//! and Monte Carlo estimators of the expectation identities.

pub mod density;
pub mod estimators;
pub mod kernel;
pub mod sampler;

pub use density::*;
pub use estimators::*;
pub use kernel::*;
pub use sampler::*;
