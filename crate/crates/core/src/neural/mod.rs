//! Feed-forward network mapping a speaker spectrum to a propagation
//! coefficient, trained through the propagation physics.
//!
//! Input is `[Re S; Im S]` and output `[alpha; kappa]`, both of width
//! `2 n_bins`. The network never sees the receiver or the distance; those
//! enter only through the loss, which compares forward- and
//! backward-propagated spectra with the measurements and pulls every
//! per-pair prediction toward the mean prediction.

mod loss;
mod network;
mod train;

pub use loss::{loss, CoefficientMatrix, LossBreakdown, LossWeights};
pub use network::{forward, input_vector, Activation, Gradients, Layer, Network, NetworkSpec, Variant};
pub use train::{
    gradients, plan_ensemble, predict, train, train_ensemble, train_planned, EnsembleResult, MemberPlan, Optimizer,
    TrainConfig, TrainedNetwork,
};
