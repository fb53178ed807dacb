//! Bayesian wavelet shrinkage for regression with strictly positive
//! additive noise.
//!
//! The pipeline: [`dwt::forward`] the data, elicit a spike-and-tail prior
//! per level ([`priors::PriorConfig::elicit`]), sample the joint posterior
//! of all coefficients with the robust adaptive Metropolis sampler
//! ([`ram::run_posterior_chain`]), then invert the posterior mean.
//! Classical thresholding rules live in [`shrink`], the simulation harness
//! in [`bench`].

pub mod bench;
pub mod cli;
pub mod diagnostics;
pub mod dwt;
pub mod error;
pub mod noise;
pub mod posterior;
pub mod priors;
pub mod ram;
pub mod shrink;

pub use dwt::{Decomposition, Wavelet, WaveletFilter};
pub use error::{Error, Result};
pub use noise::{NoiseFamily, NoiseModel};
pub use posterior::PosteriorTarget;
pub use priors::{PriorConfig, PriorSpec};
pub use ram::RamConfig;
pub use shrink::EstimatorSpec;
