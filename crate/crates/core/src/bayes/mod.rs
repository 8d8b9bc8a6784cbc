//! Metropolis-Hastings inference of the propagation coefficient and the
//! measurement noise scale.
//!
//! The target is a Gaussian likelihood on forward and backward propagation
//! residuals times independent priors. The sampler works bin by bin by
//! default, which is exact for this target because the likelihood factorizes
//! over bins once `sigma` is given.

mod diagnostics;
mod model;
mod sampler;
mod summary;
mod trace;

pub use diagnostics::{ess_bulk, ess_tail, ess_tail_chains, gelman_rubin, split_rhat, MIN_ESS_LENGTH};
pub use model::{complex_residual_logpdf, log_likelihood, log_likelihood_with, LikelihoodMode, PriorSpec};
pub use sampler::{mh_sample, LhsMode, MHConfig, UpdateScheme};
pub use summary::{summarize, ParameterSummary, PosteriorSummary};
pub use trace::{ParameterIndex, PosteriorTrace};
