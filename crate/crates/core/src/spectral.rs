//! Signal and spectrum containers plus the discrete Fourier transform.
//!
//! Conventions used throughout the crate:
//!
//! * the forward transform is an unnormalized sum, the inverse carries `1/n`;
//! * bins are in standard DFT order: DC, positive bins, then negative bins.
//!   For even `n` the Nyquist bin is reported as the negative frequency
//!   `-fs/2`;
//! * the full `n`-bin complex spectrum is kept, never a half spectrum.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cartesian coordinates in meters.
pub type Position = [f64; 3];

/// Relative tolerance used when comparing two frequency grids.
const GRID_RTOL: f64 = 1e-9;

/// Uniformly sampled real waveform tagged with the position it was recorded at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate: u32,
    position: Position,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: u32, position: Position) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("signal has no samples"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            position,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn position(&self) -> Position {
        self.position
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn with_position(mut self, position: Position) -> Self {
        self.position = position;
        self
    }
}

/// Complex DFT coefficients on the symmetric grid implied by `(n, sample_rate)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    coefficients: Vec<Complex64>,
    angular_frequencies: Vec<f64>,
    sample_rate: u32,
    position: Position,
}

impl Spectrum {
    /// Builds a spectrum; the angular-frequency grid is derived from the
    /// coefficient count and the sample rate.
    pub fn new(coefficients: Vec<Complex64>, sample_rate: u32, position: Position) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::invalid("spectrum has no coefficients"));
        }
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        let angular_frequencies = angular_grid(coefficients.len(), sample_rate);
        Ok(Self {
            coefficients,
            angular_frequencies,
            sample_rate,
            position,
        })
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn angular_frequencies(&self) -> &[f64] {
        &self.angular_frequencies
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn position(&self) -> Position {
        self.position
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Same grid and sample rate, new coefficients and position.
    pub(crate) fn replaced(&self, coefficients: Vec<Complex64>, position: Position) -> Self {
        debug_assert_eq!(coefficients.len(), self.coefficients.len());
        Self {
            coefficients,
            angular_frequencies: self.angular_frequencies.clone(),
            sample_rate: self.sample_rate,
            position,
        }
    }
}

/// Angular frequencies `2 pi f_j` of an `n`-point DFT in standard bin order.
pub fn angular_grid(n: usize, sample_rate: u32) -> Vec<f64> {
    let fs = sample_rate as f64;
    let positive = n.div_ceil(2);
    (0..n)
        .map(|j| {
            let k = if j < positive { j as f64 } else { j as f64 - n as f64 };
            2.0 * PI * k * fs / n as f64
        })
        .collect()
}

/// Index of the bin holding `-omega_j` on a standard DFT grid.
pub fn mirror_bin(j: usize, n: usize) -> usize {
    (n - j) % n
}

pub fn grids_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= GRID_RTOL * x.abs().max(y.abs()).max(1.0))
}

pub(crate) fn ensure_grids_match(a: &[f64], b: &[f64], what: &str) -> Result<()> {
    if grids_match(a, b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{what}: grids of length {} and {} differ",
            a.len(),
            b.len()
        )))
    }
}

/// Unnormalized forward DFT of a complex sequence.
pub fn forward_dft(input: &[Complex64]) -> Vec<Complex64> {
    let mut buf = input.to_vec();
    if buf.is_empty() {
        return buf;
    }
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Inverse DFT including the `1/n` factor.
pub fn inverse_dft(input: &[Complex64]) -> Vec<Complex64> {
    let mut buf = input.to_vec();
    if buf.is_empty() {
        return buf;
    }
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

pub fn dft(signal: &Signal) -> Result<Spectrum> {
    if signal.is_empty() {
        return Err(Error::invalid("cannot transform an empty signal"));
    }
    let input: Vec<Complex64> = signal.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Spectrum::new(forward_dft(&input), signal.sample_rate, signal.position)
}

/// Output of [`idft`]: the real signal plus how far the input was from
/// conjugate symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis {
    pub signal: Signal,
    /// Largest imaginary magnitude dropped when taking the real part.
    pub max_imaginary: f64,
    /// Set when `max_imaginary` exceeds `1e-6` times the largest real magnitude.
    pub asymmetry_warning: bool,
}

pub fn idft(spectrum: &Spectrum) -> Result<Synthesis> {
    if spectrum.is_empty() {
        return Err(Error::invalid("cannot invert an empty spectrum"));
    }
    let time = inverse_dft(&spectrum.coefficients);
    let max_real = time.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let max_imaginary = time.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let samples = time.iter().map(|c| c.re).collect();
    Ok(Synthesis {
        signal: Signal::new(samples, spectrum.sample_rate, spectrum.position)?,
        max_imaginary,
        asymmetry_warning: max_imaginary > 1e-6 * max_real,
    })
}

/// Root mean squared difference of two equally long sequences.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "rmse of sequences with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("rmse of empty sequences"));
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((ss / a.len() as f64).sqrt())
}
