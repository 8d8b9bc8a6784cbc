//! Room impulse responses between two points.
//!
//! In the frequency domain the response is `exp(-gamma dx)`, or equivalently
//! the Hadamard quotient of receiver and speaker spectra. Convolution here is
//! always circular, consistent with the DFT; zero-pad the inputs yourself if a
//! linear convolution is wanted.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lsq::EPS_MAG;
use crate::spectral::{self, ensure_grids_match, Signal, Spectrum};
use crate::wavemodel::{exp_factors, PropagationCoefficient};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirEstimate {
    pub frequency_response: Vec<Complex64>,
    /// Real part of the inverse DFT of `frequency_response`.
    pub time_response: Vec<f64>,
    pub delta_x: f64,
    pub angular_frequencies: Vec<f64>,
    /// Bins set to zero because the speaker magnitude was below the floor.
    pub masked_bins: Vec<usize>,
}

impl RirEstimate {
    fn from_response(frequency_response: Vec<Complex64>, delta_x: f64, grid: &[f64], masked_bins: Vec<usize>) -> Self {
        // A unit response is the identity filter; its impulse is built exactly
        // rather than through the rounding of an inverse transform.
        let identity = frequency_response.iter().all(|c| *c == Complex64::new(1.0, 0.0));
        let time_response = if identity {
            (0..frequency_response.len()).map(|t| if t == 0 { 1.0 } else { 0.0 }).collect()
        } else {
            spectral::inverse_dft(&frequency_response).iter().map(|c| c.re).collect()
        };
        Self {
            frequency_response,
            time_response,
            delta_x,
            angular_frequencies: grid.to_vec(),
            masked_bins,
        }
    }
}

pub fn rir_from_gamma(gamma: &PropagationCoefficient, delta_x: f64) -> Result<RirEstimate> {
    if !(delta_x >= 0.0) {
        return Err(Error::invalid("delta_x must be >= 0"));
    }
    let response = exp_factors(gamma, delta_x, -1.0)?;
    Ok(RirEstimate::from_response(response, delta_x, gamma.angular_frequencies(), Vec::new()))
}

/// `receiver ./ speaker`; bins with a vanishing speaker are zeroed and listed.
pub fn rir_from_measurements(speaker: &Spectrum, receiver: &Spectrum) -> Result<RirEstimate> {
    ensure_grids_match(speaker.angular_frequencies(), receiver.angular_frequencies(), "rir")?;
    let mut masked = Vec::new();
    let response: Vec<Complex64> = speaker
        .coefficients()
        .iter()
        .zip(receiver.coefficients())
        .enumerate()
        .map(|(j, (s, r))| {
            if s.norm() < EPS_MAG {
                masked.push(j);
                Complex64::new(0.0, 0.0)
            } else {
                r / s
            }
        })
        .collect();
    if masked.len() == response.len() {
        return Err(Error::Degenerate("speaker spectrum vanishes in every bin".into()));
    }
    let sp = speaker.position();
    let rp = receiver.position();
    let dx = sp.iter().zip(&rp).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(RirEstimate::from_response(response, dx, speaker.angular_frequencies(), masked))
}

/// Circular convolution of `input` with the response, done spectrally.
pub fn apply_rir(input: &Signal, rir: &RirEstimate) -> Result<Signal> {
    if input.len() != rir.frequency_response.len() {
        return Err(Error::invalid(format!(
            "signal has {} samples but the response has {} bins",
            input.len(),
            rir.frequency_response.len()
        )));
    }
    let spec = spectral::dft(input)?;
    let product: Vec<Complex64> = spec
        .coefficients()
        .iter()
        .zip(&rir.frequency_response)
        .map(|(a, b)| a * b)
        .collect();
    let out = spectral::inverse_dft(&product).iter().map(|c| c.re).collect();
    Signal::new(out, input.sample_rate(), input.position())
}

/// Peak-normalized copy of the time response for WAV export, with the
/// factor that was applied (`normalized = factor * time_response`).
pub fn normalized_for_wav(rir: &RirEstimate, peak: f64) -> (Vec<f64>, f64) {
    let max = rir.time_response.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let factor = if max > 0.0 { peak / max } else { 1.0 };
    (rir.time_response.iter().map(|x| x * factor).collect(), factor)
}
