//! Distances from spectra pairs and positions from several ranged anchors.
//!
//! A distance estimate inverts the propagation law bin by bin and summarizes
//! the candidates. [`DistanceMode::MagnitudeOnly`] reads the distance from
//! the attenuation alone and is immune to phase wrapping. Bins without
//! attenuation carry no range information there and are masked.
//!
//! [`trilaterate`] solves for the point whose distances to the anchors best
//! match the measured ranges in the least-squares sense.

mod distance;
mod trilaterate;
#[cfg(test)]
mod tests;

pub use distance::{estimate_distance, propagate_uncertainty, DistanceEstimate, DistanceMode, DistanceReport};
pub use trilaterate::{trilaterate, Anchor, PositionFix, TrilaterationConfig};
