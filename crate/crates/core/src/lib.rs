//! Frequency-dependent acoustic propagation coefficients from paired
//! speaker and receiver recordings.
//!
//! A coefficient `gamma = alpha + i kappa` per DFT bin maps a speaker
//! spectrum to a receiver spectrum a distance `dx` away by
//! `R = S exp(-gamma dx)`. The crate estimates it three ways and uses it
//! downstream:
//!
//! - [`lsq`]: closed-form least squares from the log spectral ratio.
//! - [`bayes`]: Metropolis-Hastings posterior with convergence diagnostics.
//! - [`neural`]: a physics-informed network trained on the propagation residuals.
//! - [`rir`]: room impulse responses from a coefficient or a measured pair.
//! - [`reloc`]: distances from one recording pair, positions from several.
//!
//! [`spectral`], [`wavemodel`] and [`synth`] supply the transforms, the
//! propagation model and synthetic ground truth; [`cli`] holds the commands
//! behind the `wavecoef` binary.
//!
//! Every capability has a runnable program under `examples/`:
//!
//! | example | shows |
//! |---|---|
//! | `dft_roundtrip` | transform conventions and Parseval |
//! | `propagation_physics` | propagation, its inverse, symmetry |
//! | `synthetic_dataset` | simulation, manifest files, loading |
//! | `least_squares_fit` | exact and noisy closed-form fits |
//! | `mh_inference` | posterior sampling and diagnostics |
//! | `neural_training` | training and held-out reconstruction |
//! | `room_impulse_response` | responses and convolution |
//! | `distance_and_localization` | ranges and a planar fix |
//! | `end_to_end_pipeline` | the command pipeline from code |

pub mod error;
pub mod io;
pub mod rng;
pub mod spectral;
pub mod stats;
pub mod synth;
pub mod wavemodel;

pub use error::{Error, Result};
pub mod bayes;
pub mod cli;
pub mod lsq;
pub mod neural;
pub mod reloc;
pub mod rir;
